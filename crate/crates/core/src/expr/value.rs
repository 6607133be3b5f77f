use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SECONDS_PER_DAY;

/// Declared kind of a schema field.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldType {
    Bool,
    Int,
    Text,
    Date,
    Time,
    Timestamp,
    Duration,
    /// Reference to a record of the named store, by key.
    Ref(String),
}

impl FieldType {
    pub fn keyword(&self) -> String {
        match self {
            FieldType::Bool => "bool".into(),
            FieldType::Int => "int".into(),
            FieldType::Text => "text".into(),
            FieldType::Date => "date".into(),
            FieldType::Time => "time".into(),
            FieldType::Timestamp => "timestamp".into(),
            FieldType::Duration => "duration".into(),
            FieldType::Ref(store) => format!("ref {store:?}"),
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "bool" => FieldType::Bool,
            "int" => FieldType::Int,
            "text" => FieldType::Text,
            "date" => FieldType::Date,
            "time" => FieldType::Time,
            "timestamp" => FieldType::Timestamp,
            "duration" => FieldType::Duration,
            _ => return None,
        })
    }

    pub fn to_type(&self) -> Type {
        match self {
            FieldType::Bool => Type::Bool,
            FieldType::Int => Type::Int,
            FieldType::Text => Type::Text,
            FieldType::Date => Type::Date,
            FieldType::Time => Type::Time,
            FieldType::Timestamp => Type::Timestamp,
            FieldType::Duration => Type::Duration,
            FieldType::Ref(s) => Type::Ref(s.clone()),
        }
    }

    pub fn admits(&self, value: &Value) -> bool {
        matches!(
            (self, value),
            (FieldType::Bool, Value::Bool(_))
                | (FieldType::Int, Value::Int(_))
                | (FieldType::Text, Value::Text(_))
                | (FieldType::Date, Value::Date(_))
                | (FieldType::Time, Value::Time(_))
                | (FieldType::Timestamp, Value::Timestamp(_))
                | (FieldType::Duration, Value::Duration(_))
        ) || matches!((self, value), (FieldType::Ref(s), Value::Ref { store, .. }) if s == store)
    }
}

/// Static type of an expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Type {
    Bool,
    Int,
    Text,
    Date,
    Time,
    Timestamp,
    Duration,
    Ref(String),
    /// A record of the named store.
    StoreRecord(String),
    /// A record of the named message type.
    MessageRecord(String),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("bool"),
            Type::Int => f.write_str("int"),
            Type::Text => f.write_str("text"),
            Type::Date => f.write_str("date"),
            Type::Time => f.write_str("time"),
            Type::Timestamp => f.write_str("timestamp"),
            Type::Duration => f.write_str("duration"),
            Type::Ref(s) => write!(f, "ref {s:?}"),
            Type::StoreRecord(s) => write!(f, "record of {s:?}"),
            Type::MessageRecord(s) => write!(f, "message {s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Text(String),
    /// Days since 1970-01-01.
    Date(i64),
    /// Seconds since midnight.
    Time(i64),
    /// Seconds since 1970-01-01T00:00:00.
    Timestamp(i64),
    /// Signed seconds.
    Duration(i64),
    Ref {
        store: String,
        key: Box<Value>,
    },
    Record(Record),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Text(_) => "text",
            Value::Date(_) => "date",
            Value::Time(_) => "time",
            Value::Timestamp(_) => "timestamp",
            Value::Duration(_) => "duration",
            Value::Ref { .. } => "ref",
            Value::Record(_) => "record",
        }
    }

    pub fn date_of(ts: i64) -> Value {
        Value::Date(ts.div_euclid(SECONDS_PER_DAY))
    }

    pub fn time_of(ts: i64) -> Value {
        Value::Time(ts.rem_euclid(SECONDS_PER_DAY))
    }

    /// Converts a JSON scalar to a value of the given field type. Dates accept
    /// `YYYY-MM-DD` strings or integer day numbers.
    pub fn from_json(ty: &FieldType, json: &serde_json::Value) -> Option<Value> {
        use serde_json::Value as J;
        Some(match (ty, json) {
            (FieldType::Bool, J::Bool(b)) => Value::Bool(*b),
            (FieldType::Int, J::Number(n)) => Value::Int(n.as_i64()?),
            (FieldType::Text, J::String(s)) => Value::Text(s.clone()),
            (FieldType::Date, J::Number(n)) => Value::Date(n.as_i64()?),
            (FieldType::Date, J::String(s)) => Value::Date(parse_date(s)?),
            (FieldType::Time | FieldType::Timestamp | FieldType::Duration, J::Number(n)) => {
                let v = n.as_i64()?;
                match ty {
                    FieldType::Time => Value::Time(v),
                    FieldType::Timestamp => Value::Timestamp(v),
                    _ => Value::Duration(v),
                }
            }
            (FieldType::Ref(store), key) => {
                let key = match key {
                    J::String(s) => Value::Text(s.clone()),
                    J::Number(n) => Value::Int(n.as_i64()?),
                    _ => return None,
                };
                Value::Ref { store: store.clone(), key: Box::new(key) }
            }
            _ => return None,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Bool(b) => J::Bool(*b),
            Value::Int(i) | Value::Time(i) | Value::Timestamp(i) | Value::Duration(i) => J::from(*i),
            Value::Text(s) => J::String(s.clone()),
            Value::Date(d) => J::String(format_date(*d)),
            Value::Ref { key, .. } => key.to_json(),
            Value::Record(r) => J::Object(r.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

pub fn parse_date(s: &str) -> Option<i64> {
    let d = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
    let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1)?;
    Some((d - epoch).num_days())
}

pub fn format_date(days: i64) -> String {
    let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    match epoch.checked_add_signed(chrono::TimeDelta::days(days)) {
        Some(d) => d.format("%Y-%m-%d").to_string(),
        None => days.to_string(),
    }
}

pub type Record = BTreeMap<String, Value>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub fields: Vec<(String, FieldType)>,
}

impl Schema {
    pub fn field(&self, name: &str) -> Option<&FieldType> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// The first declared field identifies a record.
    pub fn key(&self) -> Option<&str> {
        self.fields.first().map(|(n, _)| n.as_str())
    }

    pub fn conforms(&self, record: &Record) -> Result<(), String> {
        for (name, ty) in &self.fields {
            match record.get(name) {
                None => return Err(format!("missing field `{name}`")),
                Some(v) if !ty.admits(v) => {
                    return Err(format!("field `{name}` expects {} but got {}", ty.keyword(), v.kind_name()))
                }
                _ => {}
            }
        }
        if let Some(extra) = record.keys().find(|k| self.field(k).is_none()) {
            return Err(format!("unknown field `{extra}`"));
        }
        Ok(())
    }

    pub fn record_from_json(&self, json: &serde_json::Value) -> Result<Record, String> {
        let obj = json.as_object().ok_or("record payload must be an object")?;
        let mut rec = Record::new();
        for (name, ty) in &self.fields {
            let raw = obj.get(name).ok_or_else(|| format!("missing field `{name}`"))?;
            let v = Value::from_json(ty, raw)
                .ok_or_else(|| format!("field `{name}`: cannot read {raw} as {}", ty.keyword()))?;
            rec.insert(name.clone(), v);
        }
        if let Some(extra) = obj.keys().find(|k| self.field(k).is_none()) {
            return Err(format!("unknown field `{extra}`"));
        }
        Ok(rec)
    }
}

/// Schemas of every store and message type known to a model.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub stores: BTreeMap<String, Schema>,
    pub messages: BTreeMap<String, Schema>,
}

/// Contents of every object store plus scoped variable bindings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub stores: BTreeMap<String, Vec<Record>>,
    /// Variables keyed by the scope (activation) that declares them.
    pub vars: BTreeMap<u64, BTreeMap<String, Value>>,
}

impl StoreSnapshot {
    pub fn records(&self, store: &str) -> &[Record] {
        self.stores.get(store).map(Vec::as_slice).unwrap_or(&[])
    }
}
