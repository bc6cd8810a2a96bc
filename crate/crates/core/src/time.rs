//! UTC timestamps. Inputs carry an explicit offset or are bare dates
//! (midnight UTC); naive local times are rejected.

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serializer};

pub type Timestamp = DateTime<Utc>;

pub fn parse_utc(text: &str) -> Option<Timestamp> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc())
}

pub fn format_utc(t: &Timestamp) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

/// `#[serde(with = "crate::time::rfc3339")]` for `Timestamp` fields.
pub mod rfc3339 {
    use super::*;

    pub fn serialize<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_utc(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let text = String::deserialize(d)?;
        parse_utc(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("not a UTC timestamp: {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_forms() {
        let z = parse_utc("2024-05-01T00:00:00Z").unwrap();
        assert_eq!(parse_utc("2024-05-01"), Some(z));
        assert_eq!(parse_utc("2024-05-01T02:00:00+02:00"), Some(z));
        assert_eq!(format_utc(&z), "2024-05-01T00:00:00Z");
    }

    #[test]
    fn naive_times_rejected() {
        assert_eq!(parse_utc("2024-05-01T00:00:00"), None);
        assert_eq!(parse_utc("2024-05-01 00:00"), None);
        assert_eq!(parse_utc("yesterday"), None);
    }
}
