use std::cmp::Ordering;

use chrono::{DateTime, Duration, TimeZone, Utc};
use icon_core::library::{Criterion, Op};
use rand::Rng;
use serde_json::{json, Value};

const TITLES: &[&str] = &["Онтология", "онтограф", "Словарь", "корпус текстов", "Graph", "база данных"];
const SOURCES: &[&str] = &["inline", "file:///a.txt", "file:///b.txt", "http://example.org/x"];
const LANGS: &[&str] = &["ru", "uk"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

/// A document-segment record with a few searchable fields drawn from small
/// pools, so that random criteria hit a useful fraction of records.
pub fn random_document<R: Rng>(rng: &mut R, i: usize) -> (String, Value) {
    let key = format!("doc{i:04}");
    let at = base_time() + Duration::hours(rng.gen_range(0..24 * 60));
    let title = format!("{} {}", pick(rng, TITLES), rng.gen_range(0..5));
    let value = json!({
        "id": key,
        "title": title,
        "language": pick(rng, LANGS),
        "text": format!("{} {}", pick(rng, TITLES), pick(rng, TITLES)),
        "source": pick(rng, SOURCES),
        "ingested_at": at.to_rfc3339(),
    });
    (key, value)
}

pub fn random_criteria<R: Rng>(rng: &mut R) -> Vec<Criterion> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| match rng.gen_range(0..7) {
            0 => Criterion::new("language", Op::Eq, pick(rng, LANGS)),
            1 => Criterion::new("title", Op::Contains, pick(rng, &["онто", "СЛОВ", "graph", "3", "нет"])),
            2 => Criterion::new("source", Op::Prefix, pick(rng, &["file://", "http", "inline", "x"])),
            3 => {
                let at = base_time() + Duration::hours(rng.gen_range(0..24 * 60));
                Criterion::new("ingested_at", Op::Gte, at.to_rfc3339())
            }
            4 => {
                let at = base_time() + Duration::hours(rng.gen_range(0..24 * 60));
                Criterion::new("ingested_at", Op::Lte, at.to_rfc3339())
            }
            5 => Criterion::new("key", Op::Prefix, format!("doc0{}", rng.gen_range(0..10))),
            _ => Criterion::new("text", Op::Contains, pick(rng, TITLES).to_lowercase()),
        })
        .collect()
}

fn text<'a>(record: &'a Value, key: &'a str, field: &str) -> Option<&'a str> {
    if field == "key" {
        Some(key)
    } else {
        record.get(field)?.as_str()
    }
}

/// Direct evaluation of one criterion against one record.
pub fn criterion_holds(key: &str, record: &Value, c: &Criterion) -> bool {
    let Some(actual) = text(record, key, &c.field) else {
        return false;
    };
    let wanted = c.value.as_str().unwrap_or_default();
    match c.op {
        Op::Eq => actual == wanted,
        Op::Contains => actual.to_lowercase().contains(&wanted.to_lowercase()),
        Op::Prefix => actual.starts_with(wanted),
        Op::Gte | Op::Lte => {
            let ord = match (
                DateTime::parse_from_rfc3339(actual),
                DateTime::parse_from_rfc3339(wanted),
            ) {
                (Ok(a), Ok(w)) => a.cmp(&w),
                _ => actual.cmp(wanted),
            };
            if c.op == Op::Gte {
                ord != Ordering::Less
            } else {
                ord != Ordering::Greater
            }
        }
    }
}

/// Keys of the records matching every criterion, in key order.
pub fn full_scan(records: &[(String, Value)], criteria: &[Criterion]) -> Vec<String> {
    let mut keys: Vec<String> = records
        .iter()
        .filter(|(k, v)| criteria.iter().all(|c| criterion_holds(k, v, c)))
        .map(|(k, _)| k.clone())
        .collect();
    keys.sort();
    keys
}
