//! Client-side sorting, grouping and table rendering of fetched rows.

use std::cmp::Ordering;
use std::fmt::Write;

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub type Row = Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sort {
    pub key: String,
    pub order: Order,
}

/// Rows with a fixed column set. `tie` names the column that breaks ties
/// when sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub tie: String,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// `Value::Null` when the output is not grouped.
    pub key: Value,
    pub count: usize,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Presented {
    pub columns: Vec<String>,
    pub group_by: Option<String>,
    pub groups: Vec<Group>,
}

impl Table {
    pub fn new(columns: &[&str], tie: &str, rows: Vec<Row>) -> Table {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            tie: tie.to_string(),
            rows,
        }
    }

    fn field(&self, name: &str) -> Result<()> {
        if self.columns.iter().any(|c| c == name) {
            Ok(())
        } else {
            Err(CliError::UnknownField {
                field: name.to_string(),
                available: self.columns.clone(),
            })
        }
    }
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Null => 0,
        Value::Bool(_) => 1,
        Value::Number(_) => 2,
        Value::String(_) => 3,
        Value::Array(_) => 4,
        Value::Object(_) => 5,
    }
}

/// Total order on scalar JSON values: numbers numerically, strings
/// lexicographically; values of different kinds by kind.
pub fn compare(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            x.as_f64().unwrap_or(f64::NAN).total_cmp(&y.as_f64().unwrap_or(f64::NAN))
        }
        (Value::String(x), Value::String(y)) => x.cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        _ => rank(a).cmp(&rank(b)).then_with(|| a.to_string().cmp(&b.to_string())),
    }
}

fn get<'a>(row: &'a Row, key: &str) -> &'a Value {
    row.get(key).unwrap_or(&Value::Null)
}

/// Sort stably by `sort` (ties broken by the table's tie column, ascending),
/// then partition into groups by `group`. Groups appear in ascending key
/// order and keep the sorted row order; their counts sum to the row count.
pub fn present(table: Table, sort: Option<&Sort>, group: Option<&str>) -> Result<Presented> {
    if let Some(s) = sort {
        table.field(&s.key)?;
    }
    if let Some(g) = group {
        table.field(g)?;
    }
    let Table { columns, tie, mut rows } = table;
    if let Some(s) = sort {
        rows.sort_by(|a, b| {
            let primary = compare(get(a, &s.key), get(b, &s.key));
            let primary = match s.order {
                Order::Asc => primary,
                Order::Desc => primary.reverse(),
            };
            primary.then_with(|| compare(get(a, &tie), get(b, &tie)))
        });
    }
    let groups = match group {
        None => vec![Group {
            key: Value::Null,
            count: rows.len(),
            rows,
        }],
        Some(g) => {
            let mut groups: Vec<Group> = Vec::new();
            for row in rows {
                let key = get(&row, g).clone();
                match groups.iter_mut().find(|x| x.key == key) {
                    Some(x) => {
                        x.count += 1;
                        x.rows.push(row);
                    }
                    None => groups.push(Group {
                        key,
                        count: 1,
                        rows: vec![row],
                    }),
                }
            }
            groups.sort_by(|a, b| compare(&a.key, &b.key));
            groups
        }
    };
    Ok(Presented {
        columns,
        group_by: group.map(str::to_string),
        groups,
    })
}

pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format!("{:.4}", n.as_f64().unwrap_or_default()),
        other => other.to_string(),
    }
}

fn width(s: &str) -> usize {
    s.chars().count()
}

fn render_rows(out: &mut String, columns: &[String], rows: &[Row]) {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| columns.iter().map(|c| cell(get(r, c))).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| width(&r[i])).chain([width(c)]).max().unwrap_or(0))
        .collect();
    let line = |out: &mut String, values: &[String]| {
        let mut text = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                text.push_str("  ");
            }
            text.push_str(v);
            if i + 1 < values.len() {
                text.extend(std::iter::repeat_n(' ', widths[i] - width(v)));
            }
        }
        let _ = writeln!(out, "{}", text.trim_end());
    };
    line(out, columns);
    for r in &cells {
        line(out, r);
    }
}

/// Aligned plain-text table; grouped output gets a heading with the count
/// before each group.
pub fn render(p: &Presented) -> String {
    let mut out = String::new();
    match &p.group_by {
        None => {
            for g in &p.groups {
                render_rows(&mut out, &p.columns, &g.rows);
            }
        }
        Some(key) => {
            for (i, g) in p.groups.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "{key} = {} ({})", cell(&g.key), g.count);
                render_rows(&mut out, &p.columns, &g.rows);
            }
        }
    }
    out
}
