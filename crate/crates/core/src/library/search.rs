use std::cmp::Ordering;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{FieldType, Schema};
use super::{LibraryError, Result, StoredRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    /// Equal; for array fields, any element equal.
    Eq,
    /// Case-insensitive substring; for array fields, any element equal.
    Contains,
    Prefix,
    Gte,
    Lte,
}

/// One `field op value` predicate; a query is the conjunction of its criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub field: String,
    pub op: Op,
    pub value: Value,
}

impl Criterion {
    pub fn new(field: &str, op: Op, value: impl Into<Value>) -> Self {
        Criterion {
            field: field.to_string(),
            op,
            value: value.into(),
        }
    }
}

/// Parse a criteria document: a JSON array of `{field, op, value}`.
pub fn parse_criteria(bytes: &[u8]) -> Result<Vec<Criterion>> {
    serde_json::from_slice(bytes).map_err(|e| LibraryError::InvalidQuery(e.to_string()))
}

pub(super) fn check_criteria(schema: &Schema, criteria: &[Criterion]) -> Result<()> {
    if criteria.is_empty() {
        return Err(LibraryError::InvalidQuery("empty criteria".into()));
    }
    for c in criteria {
        let ty = schema
            .field_type(&c.field)
            .ok_or_else(|| LibraryError::InvalidQuery(format!("unknown field {:?}", c.field)))?;
        if ty == FieldType::Date && matches!(c.op, Op::Gte | Op::Lte) && as_date(&c.value).is_none() {
            return Err(LibraryError::InvalidQuery(format!(
                "{}: expected an RFC 3339 timestamp",
                c.field
            )));
        }
    }
    Ok(())
}

fn as_date(v: &Value) -> Option<DateTime<Utc>> {
    v.as_str()
        .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
        .map(|d| d.with_timezone(&Utc))
}

fn field_value(rec: &StoredRecord, fields: &Option<Value>, name: &str) -> Option<Value> {
    match name {
        "key" => Some(Value::from(rec.key.clone())),
        "created_at" => Some(Value::from(rec.created_at.to_rfc3339())),
        "updated_at" => Some(Value::from(rec.updated_at.to_rfc3339())),
        _ => fields.as_ref()?.get(name).cloned(),
    }
}

fn compare(ty: FieldType, a: &Value, b: &Value) -> Option<Ordering> {
    match ty {
        FieldType::Date => Some(as_date(a)?.cmp(&as_date(b)?)),
        FieldType::Number => a.as_f64()?.partial_cmp(&b.as_f64()?),
        _ => Some(a.as_str()?.cmp(b.as_str()?)),
    }
}

fn holds(ty: FieldType, op: Op, actual: &Value, wanted: &Value) -> bool {
    if let Value::Array(items) = actual {
        return match op {
            Op::Eq | Op::Contains => items.iter().any(|i| i == wanted),
            _ => false,
        };
    }
    match op {
        Op::Eq => actual == wanted,
        Op::Contains => match (actual.as_str(), wanted.as_str()) {
            (Some(a), Some(w)) => a.to_lowercase().contains(&w.to_lowercase()),
            _ => false,
        },
        Op::Prefix => match (actual.as_str(), wanted.as_str()) {
            (Some(a), Some(w)) => a.starts_with(w),
            _ => false,
        },
        Op::Gte => compare(ty, actual, wanted).is_some_and(|o| o != Ordering::Less),
        Op::Lte => compare(ty, actual, wanted).is_some_and(|o| o != Ordering::Greater),
    }
}

pub(super) fn matches(schema: &Schema, rec: &StoredRecord, criteria: &[Criterion]) -> bool {
    let fields = schema.fields(&rec.value);
    criteria.iter().all(|c| {
        let Some(ty) = schema.field_type(&c.field) else {
            return false;
        };
        field_value(rec, &fields, &c.field).is_some_and(|v| holds(ty, c.op, &v, &c.value))
    })
}
