use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::RiskError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub region_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub date: NaiveDate,
    pub cumulative_cases: u64,
}

/// Validated case records sorted by `(region_id, date)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseSeries {
    records: Vec<CaseRecord>,
}

impl CaseSeries {
    pub fn new(mut records: Vec<CaseRecord>) -> Result<Self, RiskError> {
        records.sort_by(|a, b| (&a.region_id, a.date).cmp(&(&b.region_id, b.date)));
        for pair in records.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            if prev.region_id != next.region_id {
                continue;
            }
            if prev.date == next.date {
                return Err(RiskError::Parse {
                    line: 0,
                    message: format!("duplicate record for region {} on {}", next.region_id, next.date),
                });
            }
            if next.cumulative_cases < prev.cumulative_cases {
                return Err(RiskError::Monotonicity {
                    region: next.region_id.clone(),
                    date: next.date,
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[CaseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let first = self.records.iter().map(|r| r.date).min()?;
        let last = self.records.iter().map(|r| r.date).max()?;
        Some((first, last))
    }

    /// First record of each region, ascending by region id. Region name and
    /// location are taken from it.
    pub fn regions(&self) -> impl Iterator<Item = &CaseRecord> {
        self.records
            .iter()
            .enumerate()
            .filter(|(i, r)| *i == 0 || self.records[i - 1].region_id != r.region_id)
            .map(|(_, r)| r)
    }

    /// Cumulative count on `date`, carrying the latest earlier report
    /// forward; 0 before the region's first report.
    pub fn cumulative_at(&self, region_id: &str, date: NaiveDate) -> u64 {
        let start = self.records.partition_point(|r| r.region_id.as_str() < region_id);
        self.records[start..]
            .iter()
            .take_while(|r| r.region_id == region_id && r.date <= date)
            .last()
            .map_or(0, |r| r.cumulative_cases)
    }

    /// Inserts records, replacing any existing `(region_id, date)` entry,
    /// and revalidates.
    pub fn merged(&self, update: &CaseSeries) -> Result<CaseSeries, RiskError> {
        let mut by_key: BTreeMap<(String, NaiveDate), CaseRecord> = self
            .records
            .iter()
            .map(|r| ((r.region_id.clone(), r.date), r.clone()))
            .collect();
        for r in &update.records {
            by_key.insert((r.region_id.clone(), r.date), r.clone());
        }
        CaseSeries::new(by_key.into_values().collect())
    }
}

const HEADER: [&str; 6] = ["region_id", "name", "lat", "lon", "date", "cumulative_cases"];

pub fn parse_cases(reader: impl Read) -> Result<CaseSeries, RiskError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(&e))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(RiskError::Parse {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in rdr.deserialize::<CaseRecord>() {
        let record = row.map_err(|e| csv_error(&e))?;
        if !(record.lat.is_finite() && record.lon.is_finite()) {
            return Err(RiskError::Parse {
                line: records.len() as u64 + 2,
                message: "non-finite coordinate".into(),
            });
        }
        records.push(record);
    }
    CaseSeries::new(records)
}

fn csv_error(e: &csv::Error) -> RiskError {
    RiskError::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

pub fn ingest_cases(path: impl AsRef<Path>) -> Result<CaseSeries, RiskError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| RiskError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_cases(file)
}

pub fn write_cases(records: &[CaseRecord], writer: impl Write) -> Result<(), RiskError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        wtr.serialize(r).map_err(|e| csv_error(&e))?;
    }
    wtr.flush().map_err(|e| RiskError::Io {
        path: "<writer>".into(),
        message: e.to_string(),
    })
}
