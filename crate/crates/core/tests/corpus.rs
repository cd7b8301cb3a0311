//! Printed example queries, verbatim, against the shipped fixtures.

use std::path::PathBuf;

use ssq_core::engine::{evaluate, Catalog, Limits, QueryResult};
use ssq_core::omega::Criterion;
use ssq_core::relation::load_csv;
use ssq_core::sql::{lower, parse};

pub const CORPUS: &[(&str, &str)] = &[
    ("select", r#"SELECT * FROM Item WHERE Type = "Non-Eatable" WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 200 and sum(Weight) < 400 and sum(Price) > 150"#),
    ("project", "SELECT sid, Location FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40"),
    ("aggregate project", "SELECT sid, sum(Distance), max(Rating) FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40"),
    ("unary union", "SELECT * FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40 APPLY UNARY UNION"),
    ("unary intersection", "SELECT * FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40 APPLY UNARY INTERSECTION"),
    ("cross union", "(SELECT * FROM Shop WHERE Rating>3.5 and Rating<4.7 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<36) CROSS UNION (SELECT * FROM Shop WHERE Distance>14 and Distance<19 WITH SUBSETS Shop sid CONSTRAINED BY sum(Rating)>5.5 and sum(Rating)<7.0)"),
    ("cross intersection", "(SELECT * FROM Shop WHERE Rating>3.5 and Rating<4.7 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<36) CROSS INTERSECTION (SELECT * FROM Shop WHERE Distance>14 and Distance<19 WITH SUBSETS Shop sid CONSTRAINED BY sum(Rating)>5.5 and sum(Rating)<7.0)"),
    ("cross product", "SELECT * FROM Item, Shop WHERE Price<30 WITH SUBSETS Item sid,Shop sid CONSTRAINED BY sum(Distance)>14 and sum(Distance)<19 and sum(Rating)>5.5 and sum(Rating)<7.0 and sum(Weight)>60 and sum(Weight)<90"),
    ("cross join", "SELECT * FROM Item, Shop, Available WHERE Price<30 WITH SUBSETS Item sid,Shop sid CONSTRAINED BY Item.ItemId = Available.ItemId and Shop.ShopId = Available.ShopId and sum(Distance)>14 and sum(Distance)<19 and sum(Rating)>5.5 and sum(Rating)<7.0 and sum(Weight)>60 and sum(Weight)<90"),
    ("cardinality", r#"SELECT * FROM Item WHERE Type="Eatable" WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 190 and count(sid) >= 4 and count(sid) <= 5"#),
    ("maximal", r#"SELECT * FROM Item WHERE Type="Eatable" WITH SUBSETS Item sid MAXIMAL CONSTRAINED BY sum(Weight) > 175 and sum(Weight) < 200"#),
];

fn catalog() -> Catalog {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut c = Catalog::new();
    for name in ["Item", "Shop", "Available"] {
        let path = dir.join(format!("{}.csv", name.to_lowercase()));
        c.register(load_csv(path, name, None).unwrap()).unwrap();
    }
    c
}

#[test]
fn every_printed_query_parses_lowers_and_runs() {
    let c = catalog();
    for (label, sql) in CORPUS {
        let q = parse(sql).unwrap_or_else(|e| panic!("{label}: {e}"));
        assert_eq!(parse(&q.to_string()).unwrap(), q, "{label}");
        let plan = lower(&q, &c, Criterion::Inclusion).unwrap_or_else(|e| panic!("{label}: {e}"));
        let engine =
            evaluate(&plan, &c, &Limits::default()).unwrap_or_else(|e| panic!("{label}: {e}"));
        let oracle = ssq_core::oracle::evaluate(&plan, &c).unwrap();
        assert_eq!(engine, oracle, "{label}");
    }
}

fn members(sql: &str) -> Vec<Vec<u64>> {
    let c = catalog();
    let plan = lower(&parse(sql).unwrap(), &c, Criterion::Inclusion).unwrap();
    evaluate(&plan, &c, &Limits::default())
        .unwrap()
        .member_lists()
        .unwrap()
}

#[test]
fn summed_distance_reading_leaves_the_product_empty() {
    // Read literally, the distance bounds constrain the sum over each shop
    // subset; no subset of Shop then satisfies the rating bounds as well.
    assert!(members(CORPUS[7].1).is_empty());
    assert!(members(CORPUS[8].1).is_empty());
}

#[test]
fn per_tuple_distance_reading() {
    let sql = "SELECT * FROM Item, Shop WHERE Price<30 WITH SUBSETS Item sid,Shop sid \
               CONSTRAINED BY Distance>14 and Distance<19 and sum(Rating)>5.5 and sum(Rating)<7.0 \
               and sum(Weight)>60 and sum(Weight)<90";
    let m = members(sql);
    assert_eq!(m.len(), 4);
    assert!(m.iter().all(|s| s.len() == 4));

    let joined = sql.replace("Item, Shop", "Item, Shop, Available").replace(
        "CONSTRAINED BY",
        "CONSTRAINED BY Item.ItemId = Available.ItemId and Shop.ShopId = Available.ShopId and",
    );
    let c = catalog();
    let plan = lower(&parse(&joined).unwrap(), &c, Criterion::Inclusion).unwrap();
    let r = evaluate(&plan, &c, &Limits::default()).unwrap();
    assert_eq!(r, ssq_core::oracle::evaluate(&plan, &c).unwrap());
    let QueryResult::Subsets { columns, subsets } = r else {
        panic!()
    };
    assert!(columns.contains(&"Available.ItemId".to_string()));
    // Every joined tuple is one of the listed availability pairs.
    let pairs: Vec<Vec<(String, String)>> = subsets
        .iter()
        .map(|s| {
            s.rows
                .iter()
                .map(|(_, v)| (v[0].to_string(), v[5].to_string()))
                .collect()
        })
        .collect();
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert!(p
            .iter()
            .all(|x| [("6", "2"), ("3", "5"), ("1", "3"), ("6", "5")]
                .contains(&(x.0.as_str(), x.1.as_str()))));
    }
}
