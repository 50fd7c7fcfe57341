//! Pandemic hotspot overlay.
//!
//! Cumulative case counts per region are turned into active cases over a
//! trailing window, max-normalized into intensities in `[0, 1]`, and laid
//! over the map as circular zones. Pointwise risk is the maximum intensity
//! of the zones covering a point; a point is no-go when that risk reaches
//! the configured threshold.

mod cases;
mod jhu;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cases::{ingest_cases, parse_cases, write_cases, CaseRecord, CaseSeries};
pub use jhu::convert_jhu;

pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("case data parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cumulative cases decrease for region {region} on {date}")]
    Monotonicity { region: String, date: NaiveDate },
    #[error("date {date} outside the case series range {range}")]
    DateOutOfRange { date: NaiveDate, range: String },
    #[error("intensity {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid risk configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Field construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskConfig {
    pub window_days: u32,
    pub radius_km: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            window_days: 14,
            radius_km: 25.0,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), RiskError> {
        if self.window_days == 0 {
            return Err(RiskError::Config("window_days must be positive".into()));
        }
        if !(self.radius_km > 0.0 && self.radius_km.is_finite()) {
            return Err(RiskError::Config("radius_km must be positive".into()));
        }
        Ok(())
    }
}

/// Five equal-width intensity bands, blue lowest to red highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorBand {
    Blue,
    Green,
    Yellow,
    Orange,
    Red,
}

impl ColorBand {
    pub const ALL: [ColorBand; 5] = [
        ColorBand::Blue,
        ColorBand::Green,
        ColorBand::Yellow,
        ColorBand::Orange,
        ColorBand::Red,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Half-open `[lo, hi)` intensity range; red is closed at 1.
    pub fn range(self) -> (f64, f64) {
        let i = self.index() as f64;
        (i / 5.0, (i + 1.0) / 5.0)
    }

    pub fn hex(self) -> &'static str {
        match self {
            ColorBand::Blue => "#2b6cb0",
            ColorBand::Green => "#38a169",
            ColorBand::Yellow => "#d69e2e",
            ColorBand::Orange => "#dd6b20",
            ColorBand::Red => "#c53030",
        }
    }
}

pub fn classify_band(intensity: f64) -> Result<ColorBand, RiskError> {
    if !(0.0..=1.0).contains(&intensity) {
        return Err(RiskError::OutOfRange(intensity));
    }
    let idx = ((intensity * 5.0).floor() as usize).min(4);
    Ok(ColorBand::ALL[idx])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub zone_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub radius_km: f64,
    pub intensity: f64,
    pub active_cases: u64,
    pub band: ColorBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskField {
    pub date: NaiveDate,
    pub window_days: u32,
    pub zones: Vec<Zone>,
}

impl RiskField {
    /// A field with no zones: zero risk everywhere.
    pub fn empty(date: NaiveDate) -> Self {
        Self {
            date,
            window_days: RiskConfig::default().window_days,
            zones: Vec::new(),
        }
    }

    pub fn point_risk(&self, lat: f64, lon: f64) -> f64 {
        point_risk(self, lat, lon)
    }

    pub fn is_no_go(&self, lat: f64, lon: f64, theta: f64) -> bool {
        is_no_go(self, lat, lon, theta)
    }
}

/// Great-circle distance in kilometres.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn build_risk_field(cases: &CaseSeries, date: NaiveDate, config: &RiskConfig) -> Result<RiskField, RiskError> {
    config.validate()?;
    let (first, last) = cases.date_range().ok_or_else(|| RiskError::DateOutOfRange {
        date,
        range: "empty series".into(),
    })?;
    if date < first || date > last {
        return Err(RiskError::DateOutOfRange {
            date,
            range: format!("{first}..={last}"),
        });
    }
    let earlier = date - Duration::days(i64::from(config.window_days));

    let mut zones: Vec<Zone> = cases
        .regions()
        .map(|region| {
            let now = cases.cumulative_at(&region.region_id, date);
            let before = cases.cumulative_at(&region.region_id, earlier);
            Zone {
                zone_id: region.region_id.clone(),
                name: region.name.clone(),
                lat: region.lat,
                lon: region.lon,
                radius_km: config.radius_km,
                intensity: 0.0,
                active_cases: now.saturating_sub(before),
                band: ColorBand::Blue,
            }
        })
        .collect();

    let peak = zones.iter().map(|z| z.active_cases).max().unwrap_or(0);
    if peak > 0 {
        for z in &mut zones {
            z.intensity = z.active_cases as f64 / peak as f64;
            z.band = classify_band(z.intensity)?;
        }
    }

    Ok(RiskField {
        date,
        window_days: config.window_days,
        zones,
    })
}

/// Maximum intensity over zones containing the point, 0 outside every zone.
pub fn point_risk(field: &RiskField, lat: f64, lon: f64) -> f64 {
    field
        .zones
        .iter()
        .filter(|z| haversine_km(z.lat, z.lon, lat, lon) <= z.radius_km)
        .map(|z| z.intensity)
        .fold(0.0, f64::max)
}

pub fn is_no_go(field: &RiskField, lat: f64, lon: f64, theta: f64) -> bool {
    point_risk(field, lat, lon) >= theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn zone(lat: f64, lon: f64, intensity: f64) -> Zone {
        Zone {
            zone_id: format!("{lat},{lon}"),
            name: String::new(),
            lat,
            lon,
            radius_km: 10.0,
            intensity,
            active_cases: 0,
            band: classify_band(intensity).unwrap(),
        }
    }

    fn field(zones: Vec<Zone>) -> RiskField {
        RiskField {
            date: d("2020-04-01"),
            window_days: 14,
            zones,
        }
    }

    fn series(rows: &[(&str, f64, f64, &str, u64)]) -> CaseSeries {
        let mut text = String::from("region_id,name,lat,lon,date,cumulative_cases\n");
        for (id, lat, lon, date, c) in rows {
            text.push_str(&format!("{id},{id},{lat},{lon},{date},{c}\n"));
        }
        parse_cases(text.as_bytes()).unwrap()
    }

    #[test]
    fn band_endpoints() {
        assert_eq!(classify_band(0.0).unwrap(), ColorBand::Blue);
        assert_eq!(classify_band(1.0).unwrap(), ColorBand::Red);
        assert_eq!(classify_band(0.5).unwrap(), ColorBand::Yellow);
        assert_eq!(classify_band(0.7999).unwrap(), ColorBand::Orange);
        assert_eq!(classify_band(0.8).unwrap(), ColorBand::Red);
        assert!(matches!(classify_band(1.01), Err(RiskError::OutOfRange(_))));
        assert!(classify_band(-0.1).is_err());
        assert!(classify_band(f64::NAN).is_err());
    }

    #[test]
    fn point_risk_rules() {
        let f = field(vec![zone(46.0, -120.0, 0.3), zone(46.01, -120.0, 0.9), zone(47.0, -120.0, 0.6)]);
        assert_eq!(point_risk(&f, 10.0, 10.0), 0.0);
        assert_eq!(point_risk(&f, 47.0, -120.0), 0.6);
        assert_eq!(point_risk(&f, 46.005, -120.0), 0.9);
    }

    #[test]
    fn no_go_boundary() {
        let f = field(vec![zone(46.0, -120.0, 0.9)]);
        assert!(is_no_go(&f, 46.0, -120.0, 0.75));
        let g = field(vec![zone(46.0, -120.0, 0.74999)]);
        assert!(!is_no_go(&g, 46.0, -120.0, 0.75));
        let h = field(vec![zone(46.0, -120.0, 0.75)]);
        assert!(is_no_go(&h, 46.0, -120.0, 0.75));
        let zero = field(vec![zone(46.0, -120.0, 0.0)]);
        for theta in [0.01, 0.5, 1.0] {
            assert!(!is_no_go(&zero, 46.0, -120.0, theta));
        }
    }

    #[test]
    fn all_zero_active_gives_zero_intensity() {
        let s = series(&[
            ("a", 46.0, -120.0, "2020-04-01", 5),
            ("a", 46.0, -120.0, "2020-04-02", 5),
            ("b", 47.0, -120.0, "2020-04-01", 9),
            ("b", 47.0, -120.0, "2020-04-02", 9),
        ]);
        let cfg = RiskConfig {
            window_days: 1,
            ..RiskConfig::default()
        };
        let f = build_risk_field(&s, d("2020-04-02"), &cfg).unwrap();
        assert!(f.zones.iter().all(|z| z.intensity == 0.0 && z.band == ColorBand::Blue));
    }

    #[test]
    fn max_normalization() {
        let s = series(&[
            ("a", 46.0, -120.0, "2020-04-01", 0),
            ("a", 46.0, -120.0, "2020-04-15", 10),
            ("b", 47.0, -120.0, "2020-04-01", 0),
            ("b", 47.0, -120.0, "2020-04-15", 40),
        ]);
        let f = build_risk_field(&s, d("2020-04-15"), &RiskConfig::default()).unwrap();
        let got: Vec<f64> = f.zones.iter().map(|z| z.intensity).collect();
        assert_eq!(got, vec![0.25, 1.0]);
    }

    #[test]
    fn three_region_window() {
        // Hand computation, window 14 days, evaluated on 2020-04-20 (lookback 2020-04-06).
        // r1: 130 - 30 = 100        -> 1.0
        // r2: carried 2020-04-18 value 70 - (no record <= 04-06 -> 0) = 70 -> 0.7
        // r3: 55 - carried 2020-04-05 value 50 = 5 -> 0.05
        let s = series(&[
            ("r1", 46.0, -120.0, "2020-04-01", 10),
            ("r1", 46.0, -120.0, "2020-04-06", 30),
            ("r1", 46.0, -120.0, "2020-04-20", 130),
            ("r2", 46.5, -120.0, "2020-04-10", 20),
            ("r2", 46.5, -120.0, "2020-04-18", 70),
            ("r3", 47.0, -120.0, "2020-04-05", 50),
            ("r3", 47.0, -120.0, "2020-04-19", 55),
        ]);
        let f = build_risk_field(&s, d("2020-04-20"), &RiskConfig::default()).unwrap();
        let act: Vec<u64> = f.zones.iter().map(|z| z.active_cases).collect();
        assert_eq!(act, vec![100, 70, 5]);
        let got: Vec<f64> = f.zones.iter().map(|z| z.intensity).collect();
        assert_eq!(got, vec![1.0, 0.7, 0.05]);
        assert_eq!(f.zones[1].band, ColorBand::Orange);
    }

    #[test]
    fn date_out_of_range() {
        let s = series(&[("a", 46.0, -120.0, "2020-04-01", 1)]);
        assert!(matches!(
            build_risk_field(&s, d("2020-05-01"), &RiskConfig::default()),
            Err(RiskError::DateOutOfRange { .. })
        ));
        let empty = parse_cases("region_id,name,lat,lon,date,cumulative_cases\n".as_bytes()).unwrap();
        assert!(build_risk_field(&empty, d("2020-04-01"), &RiskConfig::default()).is_err());
    }

    #[test]
    fn haversine_reference() {
        // one degree of latitude along a meridian
        let km = haversine_km(46.0, -120.0, 47.0, -120.0);
        assert!((km - 111.195).abs() < 0.01, "{km}");
        assert_eq!(haversine_km(46.0, -120.0, 46.0, -120.0), 0.0);
    }

    proptest! {
        #[test]
        fn scale_invariance(
            counts in proptest::collection::vec(0u64..500, 1..6),
            factor in 1u64..50,
        ) {
            let mut rows = Vec::new();
            let mut scaled = Vec::new();
            for (i, c) in counts.iter().enumerate() {
                let id = format!("r{i}");
                let lat = 46.0 + i as f64 * 0.1;
                rows.push((id.clone(), lat, "2020-04-01", 0));
                rows.push((id.clone(), lat, "2020-04-15", *c));
                scaled.push((id.clone(), lat, "2020-04-01", 0));
                scaled.push((id, lat, "2020-04-15", c * factor));
            }
            let to_series = |rows: &[(String, f64, &str, u64)]| {
                let mut text = String::from("region_id,name,lat,lon,date,cumulative_cases\n");
                for (id, lat, date, c) in rows {
                    text.push_str(&format!("{id},{id},{lat},-120.0,{date},{c}\n"));
                }
                parse_cases(text.as_bytes()).unwrap()
            };
            let cfg = RiskConfig::default();
            let a = build_risk_field(&to_series(&rows), d("2020-04-15"), &cfg).unwrap();
            let b = build_risk_field(&to_series(&scaled), d("2020-04-15"), &cfg).unwrap();
            for (za, zb) in a.zones.iter().zip(&b.zones) {
                prop_assert_eq!(za.intensity, zb.intensity);
                prop_assert_eq!(za.band, zb.band);
                prop_assert_eq!(
                    is_no_go(&a, za.lat, za.lon, 0.75),
                    is_no_go(&b, zb.lat, zb.lon, 0.75)
                );
            }
        }

        #[test]
        fn band_monotone(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(classify_band(lo).unwrap() <= classify_band(hi).unwrap());
        }

        #[test]
        fn point_risk_monotone_in_intensity(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let f_lo = field(vec![zone(46.0, -120.0, lo), zone(46.05, -120.0, 0.2)]);
            let f_hi = field(vec![zone(46.0, -120.0, hi), zone(46.05, -120.0, 0.2)]);
            prop_assert!(point_risk(&f_lo, 46.02, -120.0) <= point_risk(&f_hi, 46.02, -120.0));
        }
    }
}
