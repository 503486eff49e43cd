//! Run records: the config echo, the artifact version, wall time, and one
//! result block per operation with flat values and tables.

use std::collections::BTreeMap;

use lyapunov_lab::CheckStatus;
use serde::Serialize;
use toml::Value;

use crate::config::ExperimentConfig;

pub const ARTIFACT: &str = concat!("lyaplab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpResult {
    pub operation: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub values: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
}

impl OpResult {
    pub fn new(operation: &str) -> Self {
        Self {
            operation: operation.to_string(),
            status: "pass".into(),
            reason: None,
            values: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.values.insert(key.to_string(), v.into());
    }

    pub fn set_status(&mut self, status: &CheckStatus) {
        self.status = status.label().to_string();
        self.reason = match status {
            CheckStatus::Pass => None,
            CheckStatus::Fail(r) | CheckStatus::Refused(r) => Some(r.clone()),
        };
    }

    pub fn check_status(&self) -> CheckStatus {
        let reason = self.reason.clone().unwrap_or_default();
        match self.status.as_str() {
            "fail" => CheckStatus::Fail(reason),
            "refused" => CheckStatus::Refused(reason),
            _ => CheckStatus::Pass,
        }
    }
}

pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

pub fn int(v: usize) -> Value {
    Value::Integer(v as i64)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub artifact: String,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
    pub results: Vec<OpResult>,
}

impl RunRecord {
    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }
}
