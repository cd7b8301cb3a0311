//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use ssq_cli::{render, Format, Session};
use ssq_core::engine::{evaluate, evaluate_with_stats, Catalog, Limits, QueryResult};
use ssq_core::omega::{CombineMode, Criterion, Extremum, RelationOfSubsets};
use ssq_core::relation::{read_csv, Relation};
use ssq_core::sql::{lower, parse, parse_condition};
use ssq_core::subset::Subset;

/// Wall-clock ceiling for a single golden query.
const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
/// Wall-clock ceiling for the 20-row pruning run.
const PRUNING_BUDGET: Duration = Duration::from_secs(2);
/// Explored nodes must stay below this share of the full power set.
const PRUNING_SHARE: f64 = 0.10;
const ORACLE_INSTANCES: u32 = 200;
const IDENTITY_PAIRS: u32 = 1000;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn session(criterion: Criterion) -> Session {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut s = Session {
        criterion,
        ..Session::default()
    };
    for name in ["Item", "Shop", "Available"] {
        s.load(name, dir.join(format!("{}.csv", name.to_lowercase())))
            .unwrap();
    }
    s
}

fn run_with(s: &Session, sql: &str) -> Result<QueryResult, String> {
    let start = Instant::now();
    let q = parse(sql).map_err(|e| e.to_string())?;
    let r = s.query(&q).map_err(|e| e.to_string())?;
    let oracle = ssq_core::oracle::evaluate(
        &lower(&q, &s.catalog, s.criterion).map_err(|e| e.to_string())?,
        &s.catalog,
    )
    .map_err(|e| e.to_string())?;
    if oracle != r {
        return Err(format!("engine and oracle disagree on `{sql}`"));
    }
    let took = start.elapsed();
    if took > GOLDEN_BUDGET {
        return Err(format!("took {took:?}"));
    }
    Ok(r)
}

fn members_with(s: &Session, sql: &str) -> Result<Vec<Vec<u64>>, String> {
    run_with(s, sql)?
        .member_lists()
        .ok_or_else(|| "expected a subset result".to_string())
}

fn members(sql: &str) -> Result<Vec<Vec<u64>>, String> {
    members_with(&session(Criterion::Inclusion), sql)
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

// Fixture rowids are 0-based: i1 is 0, s1 is 0.

fn non_eatable_golden() -> Outcome {
    let m = members(
        r#"SELECT * FROM Item WHERE Type = "Non-Eatable" WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 200 and sum(Weight) < 400 and sum(Price) > 150"#,
    )?;
    expect(
        "members",
        m,
        vec![
            vec![1, 8],
            vec![0, 1, 8],
            vec![0, 3, 8],
            vec![3, 6, 8],
            vec![0, 3, 6, 8],
        ],
    )?;
    Ok("5 subsets, sids 1-5 in canonical order".into())
}

fn projection_golden() -> Outcome {
    let mut s = session(Criterion::Inclusion);
    s.format = Format::Csv;
    let where_ = "FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40";
    let left = run_with(&s, &format!("SELECT sid, Location {where_}"))?;
    expect(
        "left",
        render(&left, Format::Csv),
        "sid,Location\n1,M.G. Road\n1,Downing Street\n2,M.G. Road\n2,S.D. Road\n".into(),
    )?;
    let right = run_with(
        &s,
        &format!("SELECT sid, sum(Distance), max(Rating) {where_}"),
    )?;
    expect(
        "right",
        render(&right, Format::Csv),
        "sid,sum(Distance),max(Rating)\n1,38,4.6\n2,32,4.8\n".into(),
    )?;
    Ok("4 Location rows; (1,38,4.6) and (2,32,4.8)".into())
}

fn unary_combine_intersection_follows_the_data() -> Outcome {
    let q = "SELECT * FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40 APPLY UNARY";
    expect(
        "union",
        members(&format!("{q} UNION"))?,
        vec![vec![0, 2, 3]],
    )?;
    // The two satisfying subsets are {s1,s3} and {s1,s4}; they share only s1.
    expect(
        "intersection",
        members(&format!("{q} INTERSECTION"))?,
        vec![vec![0]],
    )?;
    Ok("union {s1,s3,s4}; intersection {s1}".into())
}

fn combining_golden() -> Outcome {
    let a = "(SELECT * FROM Shop WHERE Rating>3.5 and Rating<4.7 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<36)";
    let b = "(SELECT * FROM Shop WHERE Distance>14 and Distance<19 WITH SUBSETS Shop sid CONSTRAINED BY sum(Rating)>5.5 and sum(Rating)<7.0)";
    expect(
        "left",
        members(&a[1..a.len() - 1])?,
        vec![vec![0, 1], vec![1, 2]],
    )?;
    expect(
        "right",
        members(&b[1..b.len() - 1])?,
        vec![vec![1, 4], vec![2, 4]],
    )?;
    expect(
        "cross union",
        members(&format!("{a} CROSS UNION {b}"))?,
        vec![vec![0, 1, 4], vec![1, 2, 4], vec![0, 1, 2, 4]],
    )?;
    expect(
        "cross intersection",
        members(&format!("{a} CROSS INTERSECTION {b}"))?,
        vec![vec![1], vec![2]],
    )?;
    expect(
        "union",
        members(&format!("{a} UNION {b}"))?,
        vec![vec![0, 1], vec![1, 2], vec![1, 4], vec![2, 4]],
    )?;
    Ok("3 / 2 / 4 subsets".into())
}

fn cross_product_golden() -> Outcome {
    expect(
        "shop side",
        members("SELECT * FROM Shop WITH SUBSETS Shop sid CONSTRAINED BY Distance>14 and Distance<19 and sum(Rating)>5.5 and sum(Rating)<7.0")?,
        vec![vec![1, 4], vec![2, 4]],
    )?;
    expect(
        "item side",
        members("SELECT * FROM Item WHERE Price<30 WITH SUBSETS Item sid CONSTRAINED BY sum(Weight)>60 and sum(Weight)<90")?,
        vec![vec![0, 5], vec![2, 5]],
    )?;
    let product = members(
        "SELECT * FROM Item, Shop WHERE Price<30 WITH SUBSETS Item sid,Shop sid CONSTRAINED BY Distance>14 and Distance<19 \
         and sum(Rating)>5.5 and sum(Rating)<7.0 and sum(Weight)>60 and sum(Weight)<90",
    )?;
    expect("product subsets", product.len(), 4)?;
    expect(
        "pairs per subset",
        product.iter().map(Vec::len).collect::<Vec<_>>(),
        vec![4; 4],
    )?;
    Ok("sides {{s2,s5},{s3,s5}} and {{i1,i6},{i3,i6}}; 4 product subsets (distance bounds read per tuple)".into())
}

fn cardinality_golden() -> Outcome {
    let m = members(
        r#"SELECT * FROM Item WHERE Type="Eatable" WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 190 and count(sid) >= 4 and count(sid) <= 5"#,
    )?;
    expect("members", m, vec![vec![2, 4, 5, 7], vec![2, 4, 5, 7, 9]])?;
    Ok("{{i3,i5,i6,i8},{i3,i5,i6,i8,i10}}".into())
}

fn maximal_golden() -> Outcome {
    let sql = r#"SELECT * FROM Item WHERE Type="Eatable" WITH SUBSETS Item sid MAXIMAL CONSTRAINED BY sum(Weight) > 175 and sum(Weight) < 200"#;
    let want = vec![vec![2, 4, 5, 7], vec![2, 4, 7, 9], vec![2, 5, 7, 9]];
    for c in [Criterion::Inclusion, Criterion::Cardinality] {
        expect(
            &format!("{c:?}"),
            members_with(&session(c), sql)?,
            want.clone(),
        )?;
    }
    Ok("three 4-subsets under both criteria".into())
}

const CORPUS: &[&str] = &[
    r#"SELECT * FROM Item WHERE Type = "Non-Eatable" WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 200 and sum(Weight) < 400 and sum(Price) > 150"#,
    "SELECT sid, Location FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40",
    "SELECT sid, sum(Distance), max(Rating) FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40",
    "SELECT * FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40 APPLY UNARY UNION",
    "SELECT * FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40 APPLY UNARY INTERSECTION",
    "(SELECT * FROM Shop WHERE Rating>3.5 and Rating<4.7 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<36) CROSS UNION (SELECT * FROM Shop WHERE Distance>14 and Distance<19 WITH SUBSETS Shop sid CONSTRAINED BY sum(Rating)>5.5 and sum(Rating)<7.0)",
    "(SELECT * FROM Shop WHERE Rating>3.5 and Rating<4.7 WITH SUBSETS Shop sid CONSTRAINED BY sum(Distance)>30 and sum(Distance)<36) CROSS INTERSECTION (SELECT * FROM Shop WHERE Distance>14 and Distance<19 WITH SUBSETS Shop sid CONSTRAINED BY sum(Rating)>5.5 and sum(Rating)<7.0)",
    "SELECT * FROM Item, Shop WHERE Price<30 WITH SUBSETS Item sid,Shop sid CONSTRAINED BY sum(Distance)>14 and sum(Distance)<19 and sum(Rating)>5.5 and sum(Rating)<7.0 and sum(Weight)>60 and sum(Weight)<90",
    "SELECT * FROM Item, Shop, Available WHERE Price<30 WITH SUBSETS Item sid,Shop sid CONSTRAINED BY Item.ItemId = Available.ItemId and Shop.ShopId = Available.ShopId and sum(Distance)>14 and sum(Distance)<19 and sum(Rating)>5.5 and sum(Rating)<7.0 and sum(Weight)>60 and sum(Weight)<90",
    r#"SELECT * FROM Item WHERE Type="Eatable" WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 190 and count(sid) >= 4 and count(sid) <= 5"#,
    r#"SELECT * FROM Item WHERE Type="Eatable" WITH SUBSETS Item sid MAXIMAL CONSTRAINED BY sum(Weight) > 175 and sum(Weight) < 200"#,
];

fn verbatim_corpus() -> Outcome {
    let s = session(Criterion::Inclusion);
    for sql in CORPUS {
        let q = parse(sql).map_err(|e| format!("{e} in `{sql}`"))?;
        lower(&q, &s.catalog, s.criterion).map_err(|e| format!("{e} in `{sql}`"))?;
    }
    Ok(format!("{} texts parse and lower", CORPUS.len()))
}

fn random_table(rows: &[(i64, i64, u8)]) -> Relation {
    let mut text = String::from("a,b,c\n");
    for (a, b, c) in rows {
        text.push_str(&format!(
            "{a},{}.{:02},{}\n",
            b / 100,
            b % 100,
            ["x", "y", "z"][*c as usize % 3]
        ));
    }
    read_csv(text.as_bytes(), "T", None).unwrap()
}

fn random_query() -> impl Strategy<Value = String> {
    let op = || prop::sample::select(vec!["<", "<=", ">", ">=", "=", "!="]);
    let atom = prop_oneof![
        (op(), -40i64..200).prop_map(|(o, k)| format!("sum(a) {o} {k}")),
        (op(), 0i64..7).prop_map(|(o, k)| format!("count(sid) {o} {k}")),
        (op(), -20i64..60).prop_map(|(o, k)| format!("max(a) {o} {k}")),
        (op(), -20i64..60).prop_map(|(o, k)| format!("min(a) {o} {k}")),
        (op(), 0i64..30).prop_map(|(o, k)| format!("avg(b) {o} {k}.25")),
    ];
    let cond = prop::collection::vec(atom, 1..4).prop_map(|v| v.join(" and "));
    let tuple = prop_oneof![
        Just(String::new()),
        (op(), -20i64..60).prop_map(|(o, k)| format!(" WHERE a {o} {k}"))
    ];
    let select = prop::sample::select(vec!["*", "sid, c", "sid, sum(a), max(b)"]);
    let extremum = prop::sample::select(vec!["", " MAXIMAL", " MINIMAL"]);
    (select, tuple, extremum, cond).prop_map(|(s, t, e, c)| {
        format!("SELECT {s} FROM T{t} WITH SUBSETS T sid{e} CONSTRAINED BY {c}")
    })
}

fn subset_of(base: &Arc<Relation>, mask: &[bool]) -> Subset {
    Subset::new(
        base.clone(),
        base.rowids().zip(mask).filter(|(_, &m)| m).map(|(r, _)| r),
    )
    .unwrap()
}

fn properties() -> Outcome {
    let cfg = |cases| Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let fail = |what: &str, e: &dyn std::fmt::Display| format!("{what}: {e}");

    // (a) engine and oracle agree.
    let rows = prop::collection::vec((-20i64..60, 0i64..900, 0u8..3), 1..=12);
    let agreed = std::cell::Cell::new(0u32);
    TestRunner::new(cfg(ORACLE_INSTANCES))
        .run(
            &(rows, random_query(), any::<bool>()),
            |(rows, sql, card)| {
                let mut c = Catalog::new();
                c.register(random_table(&rows)).unwrap();
                let criterion = if card {
                    Criterion::Cardinality
                } else {
                    Criterion::Inclusion
                };
                let plan = lower(&parse(&sql).unwrap(), &c, criterion).unwrap();
                let engine = evaluate(&plan, &c, &Limits::default()).map_err(|e| e.to_string());
                let oracle = ssq_core::oracle::evaluate(&plan, &c).map_err(|e| e.to_string());
                prop_assert_eq!(engine, oracle, "{}", sql);
                agreed.set(agreed.get() + 1);
                Ok(())
            },
        )
        .map_err(|e| fail("engine vs oracle", &e))?;

    // (b) complement laws, double complement, De Morgan.
    let base = Arc::new(random_table(
        &(0..14).map(|i| (i, i, 0)).collect::<Vec<_>>(),
    ));
    let masks = (
        prop::collection::vec(any::<bool>(), 14),
        prop::collection::vec(any::<bool>(), 14),
    );
    let pairs = std::cell::Cell::new(0u32);
    TestRunner::new(cfg(IDENTITY_PAIRS))
        .run(&masks, |(x, y)| {
            let (s, t) = (subset_of(&base, &x), subset_of(&base, &y));
            prop_assert_eq!(
                s.union(&s.complement()).unwrap(),
                Subset::whole(base.clone())
            );
            prop_assert_eq!(
                s.intersect(&s.complement()).unwrap(),
                Subset::empty(base.clone())
            );
            prop_assert_eq!(s.complement().complement(), s.clone());
            prop_assert_eq!(
                s.union(&t).unwrap().complement(),
                s.complement().intersect(&t.complement()).unwrap()
            );
            prop_assert_eq!(
                s.intersect(&t).unwrap().complement(),
                s.complement().union(&t.complement()).unwrap()
            );
            pairs.set(pairs.get() + 1);
            Ok(())
        })
        .map_err(|e| fail("identities", &e))?;

    // (c) structure holds after every operator; (d) maximal and minimal
    // results are antichains.
    let family = prop::collection::vec(prop::collection::vec(any::<bool>(), 7), 0..10);
    TestRunner::new(cfg(300))
        .run(&(family.clone(), family), |(ma, mb)| {
            let fam = |ms: &[Vec<bool>]| {
                RelationOfSubsets::new(base.clone(), ms.iter().map(|m| subset_of(&base, m)))
                    .unwrap()
            };
            let (a, b) = (fam(&ma), fam(&mb));
            let outputs = [
                a.complement(),
                a.set_combine(&b, CombineMode::Union).unwrap(),
                a.set_combine(&b, CombineMode::Intersection).unwrap(),
                a.cross_combine(&b, CombineMode::Union).unwrap(),
                a.cross_combine(&b, CombineMode::Intersection).unwrap(),
                a.tuple_select(&parse_condition("a > 3").unwrap()).unwrap(),
                a.constraint_filter(&parse_condition("sum(a) > 5").unwrap())
                    .unwrap(),
                a.maxmin(Extremum::Maximal, Criterion::Inclusion),
                a.maxmin(Extremum::Minimal, Criterion::Inclusion),
            ];
            for w in &outputs {
                prop_assert!(w.validate().is_ok());
            }
            for w in &outputs[7..] {
                for x in w.subsets() {
                    for y in w.subsets() {
                        prop_assert!(x == y || !x.is_subset_of(y));
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| fail("structure", &e))?;

    Ok(format!(
        "{} oracle instances, {} identity pairs, 300 structure and antichain cases",
        agreed.get(),
        pairs.get()
    ))
}

/// Twenty rows whose weights are a fixed permutation of 10..=105.
fn pruning_fixture(n: usize) -> Relation {
    let mut text = String::from("Id,Weight\n");
    for i in 0..n {
        text.push_str(&format!("{},{}\n", i + 1, 10 + 5 * ((i * 7) % 20)));
    }
    read_csv(text.as_bytes(), "P", None).unwrap()
}

fn pruning() -> Outcome {
    let full = pruning_fixture(20);
    let mut weights: Vec<i64> = full
        .tuples()
        .iter()
        .map(|t| t.values[1].to_string().parse().unwrap())
        .collect();
    weights.sort_unstable();
    let bound: i64 = weights[..5].iter().sum();
    let sql = format!("SELECT * FROM P WITH SUBSETS P sid CONSTRAINED BY sum(Weight) <= {bound}");

    let mut c = Catalog::new();
    c.register(full).unwrap();
    let plan = lower(&parse(&sql).unwrap(), &c, Criterion::Inclusion).unwrap();
    let start = Instant::now();
    let (result, stats) =
        evaluate_with_stats(&plan, &c, &Limits::default()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let ceiling = (PRUNING_SHARE * (1u64 << 20) as f64) as u64;
    if stats.nodes >= ceiling {
        return Err(format!("{} nodes, ceiling {ceiling}", stats.nodes));
    }
    if took > PRUNING_BUDGET {
        return Err(format!("took {took:?}"));
    }

    let mut t = Catalog::new();
    t.register(pruning_fixture(16)).unwrap();
    let plan16 = lower(&parse(&sql).unwrap(), &t, Criterion::Inclusion).unwrap();
    let engine = evaluate(&plan16, &t, &Limits::default()).map_err(|e| e.to_string())?;
    let oracle = ssq_core::oracle::evaluate(&plan16, &t).map_err(|e| e.to_string())?;
    expect("16-row truncation", engine == oracle, true)?;
    Ok(format!(
        "{} nodes of {} ({:.2}%), {} subsets, {took:?}",
        stats.nodes,
        1u64 << 20,
        100.0 * stats.nodes as f64 / (1u64 << 20) as f64,
        result.member_lists().map_or(0, |m| m.len())
    ))
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("non-eatable weight and price golden", non_eatable_golden),
        ("subset projection golden", projection_golden),
        (
            "unary combine (intersection is computed from the rows)",
            unary_combine_intersection_follows_the_data,
        ),
        (
            "cross union / cross intersection / union golden",
            combining_golden,
        ),
        ("cross product golden", cross_product_golden),
        ("cardinality constraint golden", cardinality_golden),
        ("maximal subsets golden", maximal_golden),
        ("verbatim parse corpus", verbatim_corpus),
        ("property suite", properties),
        ("pruning effectiveness", pruning),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
