use super::value::Value;

/// Ordinal of a tuple within the extension of the table it came from.
pub type RowId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tuple {
    pub rowid: RowId,
    pub values: Vec<Value>,
}

impl Tuple {
    pub fn new(rowid: RowId, values: Vec<Value>) -> Self {
        Tuple { rowid, values }
    }
}
