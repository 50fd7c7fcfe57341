//! Adapter for JHU CSSE daily-report CSVs.
//!
//! Maps `FIPS`, `Admin2`, `Province_State`, `Lat`, `Long_`, `Confirmed`
//! (and `Last_Update` when no date is supplied) into canonical case
//! records. Rows without coordinates (the "Unassigned" buckets) are skipped.

use std::io::Read;

use chrono::NaiveDate;

use super::{CaseRecord, RiskError};

fn parse_report_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let day = s.split([' ', 'T']).next()?;
    NaiveDate::parse_from_str(day, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(day, "%m/%d/%y"))
        .or_else(|_| NaiveDate::parse_from_str(day, "%m/%d/%Y"))
        .ok()
}

fn region_id(fips: Option<&str>, state: &str, county: &str) -> String {
    if let Some(f) = fips.map(str::trim).filter(|f| !f.is_empty()) {
        let f = f.strip_suffix(".0").unwrap_or(f);
        if let Ok(n) = f.parse::<u64>() {
            return format!("{n:05}");
        }
        return f.to_owned();
    }
    if county.is_empty() {
        state.to_owned()
    } else {
        format!("{state}/{county}")
    }
}

/// Converts one daily report. `date` overrides `Last_Update`.
pub fn convert_jhu(reader: impl Read, date: Option<NaiveDate>) -> Result<Vec<CaseRecord>, RiskError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| RiskError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim_start_matches('\u{feff}') == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| RiskError::Parse {
            line: 1,
            message: format!("missing JHU column {name}"),
        })
    };
    let state_c = need("Province_State")?;
    let lat_c = need("Lat")?;
    let lon_c = need("Long_")?;
    let confirmed_c = need("Confirmed")?;
    let admin_c = col("Admin2");
    let fips_c = col("FIPS");
    let update_c = col("Last_Update");

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| RiskError::Parse {
            line,
            message: e.to_string(),
        })?;
        let get = |c: Option<usize>| c.and_then(|c| row.get(c)).map(str::trim).unwrap_or("");
        let (lat, lon) = match (get(Some(lat_c)).parse::<f64>(), get(Some(lon_c)).parse::<f64>()) {
            (Ok(lat), Ok(lon)) if lat != 0.0 || lon != 0.0 => (lat, lon),
            _ => continue,
        };
        let confirmed = get(Some(confirmed_c)).parse::<f64>().map_err(|_| RiskError::Parse {
            line,
            message: format!("Confirmed is not a number: {:?}", get(Some(confirmed_c))),
        })?;
        if confirmed.is_nan() || confirmed < 0.0 {
            return Err(RiskError::Parse {
                line,
                message: "negative Confirmed count".into(),
            });
        }
        let row_date = match date {
            Some(d) => d,
            None => parse_report_date(get(update_c)).ok_or_else(|| RiskError::Parse {
                line,
                message: "no date given and Last_Update unparseable".into(),
            })?,
        };
        let state = get(Some(state_c));
        let county = get(admin_c);
        out.push(CaseRecord {
            region_id: region_id(fips_c.map(|c| row.get(c).unwrap_or("")), state, county),
            name: if county.is_empty() {
                state.to_owned()
            } else {
                format!("{county}, {state}")
            },
            lat,
            lon,
            date: row_date,
            cumulative_cases: confirmed.round() as u64,
        });
    }
    Ok(out)
}
