use serde_json::Value;

use super::{LibraryError, Result, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    Str,
    Array,
    Object,
    /// RFC 3339 timestamp string.
    Date,
    Number,
}

impl FieldType {
    fn accepts(self, v: &Value) -> bool {
        match self {
            FieldType::Str => v.is_string(),
            FieldType::Array => v.is_array(),
            FieldType::Object => v.is_object(),
            FieldType::Number => v.is_number(),
            FieldType::Date => v
                .as_str()
                .is_some_and(|s| chrono::DateTime::parse_from_rfc3339(s).is_ok()),
        }
    }
}

/// Shape check applied at the data-tier boundary.
#[derive(Debug, Clone)]
pub enum Schema {
    /// A JSON object with the listed required fields.
    Json {
        required: &'static [(&'static str, FieldType)],
        /// Fields usable in search criteria.
        indexed: &'static [(&'static str, FieldType)],
    },
    /// The flat serialized inverted-index format.
    IndexFile,
}

/// Pseudo-fields every record can be searched by.
pub const RECORD_FIELDS: [(&str, FieldType); 3] = [
    ("key", FieldType::Str),
    ("created_at", FieldType::Date),
    ("updated_at", FieldType::Date),
];

pub const INDEX_FILE_MAGIC: &str = "ICONIDX";

impl Schema {
    pub fn for_segment(segment: Segment) -> Schema {
        use FieldType::*;
        match segment {
            Segment::Documents => Schema::Json {
                required: &[
                    ("id", Str),
                    ("title", Str),
                    ("language", Str),
                    ("text", Str),
                    ("source", Str),
                    ("ingested_at", Date),
                ],
                indexed: &[
                    ("id", Str),
                    ("title", Str),
                    ("language", Str),
                    ("text", Str),
                    ("source", Str),
                    ("ingested_at", Date),
                ],
            },
            Segment::Corpora => Schema::Json {
                required: &[("id", Str), ("name", Str), ("doc_ids", Array)],
                indexed: &[("id", Str), ("name", Str), ("doc_ids", Array)],
            },
            Segment::Ontologies => Schema::Json {
                required: &[
                    ("nodes", Array),
                    ("edges", Array),
                    ("status", Str),
                    ("provenance", Str),
                ],
                indexed: &[("status", Str), ("provenance", Str), ("digest", Str)],
            },
            Segment::Termsets => Schema::Json {
                required: &[("terms", Array)],
                indexed: &[("corpus_id", Str)],
            },
            Segment::Conceptsets => Schema::Json {
                required: &[("concepts", Array)],
                indexed: &[("corpus_id", Str)],
            },
            Segment::Relationsets => Schema::Json {
                required: &[("relations", Array)],
                indexed: &[("corpus_id", Str)],
            },
            Segment::Projects => Schema::Json {
                required: &[("id", Str), ("name", Str), ("state", Str), ("event_log", Array)],
                indexed: &[("id", Str), ("name", Str), ("state", Str)],
            },
            Segment::Dictionaries => Schema::Json {
                required: &[("id", Str), ("source_kind", Str), ("entries", Array)],
                indexed: &[("id", Str), ("source_kind", Str)],
            },
            Segment::Indexes => Schema::IndexFile,
        }
    }

    pub fn validate(&self, segment: Segment, value: &[u8]) -> Result<()> {
        let violation = |reason: String| LibraryError::SchemaViolation { segment, reason };
        match self {
            Schema::Json { required, .. } => {
                let v: Value = serde_json::from_slice(value)
                    .map_err(|e| violation(format!("not a JSON document: {e}")))?;
                let obj = v
                    .as_object()
                    .ok_or_else(|| violation("expected a JSON object".into()))?;
                for (name, ty) in required.iter() {
                    match obj.get(*name) {
                        None => return Err(violation(format!("missing field {name:?}"))),
                        Some(f) if !ty.accepts(f) => {
                            return Err(violation(format!("field {name:?} should be {ty:?}")))
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
            Schema::IndexFile => {
                let text = std::str::from_utf8(value)
                    .map_err(|_| violation("index file is not UTF-8".into()))?;
                if text.lines().next().is_some_and(|l| l.starts_with(INDEX_FILE_MAGIC)) {
                    Ok(())
                } else {
                    Err(violation(format!("index file must start with {INDEX_FILE_MAGIC}")))
                }
            }
        }
    }

    /// Type of a searchable field, including the record pseudo-fields.
    pub fn field_type(&self, field: &str) -> Option<FieldType> {
        let own: &[(&str, FieldType)] = match self {
            Schema::Json { indexed, .. } => indexed,
            Schema::IndexFile => &[("corpus_id", FieldType::Str), ("version", FieldType::Number)],
        };
        own.iter()
            .chain(RECORD_FIELDS.iter())
            .find(|(n, _)| *n == field)
            .map(|(_, t)| *t)
    }

    /// Extract the searchable fields of a stored value.
    pub fn fields(&self, value: &[u8]) -> Option<Value> {
        match self {
            Schema::Json { .. } => serde_json::from_slice(value).ok(),
            Schema::IndexFile => {
                let text = std::str::from_utf8(value).ok()?;
                let mut obj = serde_json::Map::new();
                for line in text.lines().skip(1).take_while(|l| !l.starts_with("doc ")) {
                    if let Some((k, v)) = line.split_once(' ') {
                        let v = match k {
                            "version" => v.parse::<u64>().map(Value::from).ok()?,
                            _ => Value::from(v),
                        };
                        obj.insert(k.to_string(), v);
                    }
                }
                Some(Value::Object(obj))
            }
        }
    }
}
