//! Review dump parsing and version timelines.
//!
//! Each input line holds five fields separated by the literal `******`:
//! rating, review text, post date, app version and region.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Field separator of the review dump format.
pub const SEPARATOR: &str = "******";

const DATE_FORMAT: &str = "%b %d, %Y";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("FieldCountError")]
    FieldCount,
    #[error("RatingError")]
    Rating,
    #[error("DateError")]
    Date,
    #[error("VersionError")]
    Version,
    #[error("RegionError")]
    Region,
    #[error("EmptyTextError")]
    EmptyText,
}

/// A rejected input line. Displays as `line <n>: <error kind>`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line_no}: {kind}")]
pub struct ParseError {
    pub line_no: usize,
    pub kind: ParseErrorKind,
}

/// Dot-separated numeric app version, ordered segment-wise.
///
/// Missing trailing segments compare as zero, so `1.0` and `1` sit at the
/// same numeric position; the raw string breaks that tie to keep the order
/// total.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Version {
    raw: String,
    segments: Vec<u64>,
}

impl Version {
    pub fn parse(raw: &str) -> Option<Self> {
        if raw.is_empty() {
            return None;
        }
        let segments = raw
            .split('.')
            .map(|s| {
                if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                    None
                } else {
                    s.parse::<u64>().ok()
                }
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            raw: raw.to_string(),
            segments,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn segments(&self) -> &[u64] {
        &self.segments
    }

    fn numeric_cmp(&self, other: &Self) -> Ordering {
        let n = self.segments.len().max(other.segments.len());
        for i in 0..n {
            let a = self.segments.get(i).copied().unwrap_or(0);
            let b = other.segments.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        self.numeric_cmp(other).then_with(|| self.raw.cmp(&other.raw))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Serialize for Version {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Version::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid version {raw:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReview {
    pub rating: f64,
    pub text: String,
    pub post_date: NaiveDate,
    pub version: Version,
    pub region: String,
    /// Line number in the source file (1-based).
    pub review_id: usize,
}

/// Parses one physical line of the review dump.
///
/// The first field is the rating and the last three are date, version and
/// region; whatever lies between is the review text, separators included.
pub fn parse_review_line(line: &str, line_no: usize) -> Result<RawReview, ParseError> {
    let err = |kind| ParseError { line_no, kind };

    let mut tail = line.rsplitn(4, SEPARATOR);
    let region = tail.next().ok_or(err(ParseErrorKind::FieldCount))?;
    let version = tail.next().ok_or(err(ParseErrorKind::FieldCount))?;
    let date = tail.next().ok_or(err(ParseErrorKind::FieldCount))?;
    let head = tail.next().ok_or(err(ParseErrorKind::FieldCount))?;
    let (rating, text) = head
        .split_once(SEPARATOR)
        .ok_or(err(ParseErrorKind::FieldCount))?;

    let rating: f64 = rating
        .trim()
        .parse()
        .map_err(|_| err(ParseErrorKind::Rating))?;
    if !(1.0..=5.0).contains(&rating) {
        return Err(err(ParseErrorKind::Rating));
    }
    if text.trim().is_empty() {
        return Err(err(ParseErrorKind::EmptyText));
    }
    let post_date =
        NaiveDate::parse_from_str(date.trim(), DATE_FORMAT).map_err(|_| err(ParseErrorKind::Date))?;
    let version = Version::parse(version.trim()).ok_or(err(ParseErrorKind::Version))?;
    let region = region.trim();
    if region.len() != 2 || !region.bytes().all(|b| b.is_ascii_uppercase()) {
        return Err(err(ParseErrorKind::Region));
    }

    Ok(RawReview {
        rating,
        text: text.to_string(),
        post_date,
        version,
        region: region.to_string(),
        review_id: line_no,
    })
}

/// Inverse of [`parse_review_line`].
pub fn format_review_line(r: &RawReview) -> String {
    format!(
        "{:?}{SEPARATOR}{}{SEPARATOR}{}{SEPARATOR}{}{SEPARATOR}{}",
        r.rating,
        r.text,
        r.post_date.format("%b %-d, %Y"),
        r.version,
        r.region
    )
}

/// Parse result of a whole review file: accepted records plus the skip report.
#[derive(Debug, Clone, Default)]
pub struct ParsedReviews {
    pub reviews: Vec<RawReview>,
    pub skipped: Vec<ParseError>,
    pub total_lines: usize,
}

impl ParsedReviews {
    /// Plain-text skip report, one `line <n>: <kind>` row per rejected line.
    pub fn skip_report(&self) -> String {
        let mut out = String::new();
        for e in &self.skipped {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses every line of `input`. Malformed lines are collected, not fatal.
/// Blank lines count as lines and are reported as field-count errors.
pub fn parse_reviews(input: &str) -> ParsedReviews {
    let mut parsed = ParsedReviews::default();
    for (i, line) in input.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        parsed.total_lines += 1;
        match parse_review_line(line, i + 1) {
            Ok(r) => parsed.reviews.push(r),
            Err(e) => parsed.skipped.push(e),
        }
    }
    parsed
}

/// All reviews of one app version, at position `index_t` in the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionCorpus {
    pub version: Version,
    pub reviews: Vec<RawReview>,
    pub index_t: usize,
}

/// Groups reviews into per-version corpora in ascending version order.
/// Within a corpus reviews are ordered by post date, then review id.
pub fn group_by_version(reviews: Vec<RawReview>) -> Vec<VersionCorpus> {
    let mut groups: BTreeMap<Version, Vec<RawReview>> = BTreeMap::new();
    for r in reviews {
        groups.entry(r.version.clone()).or_default().push(r);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(index_t, (version, mut reviews))| {
            reviews.sort_by(|a, b| {
                a.post_date
                    .cmp(&b.post_date)
                    .then(a.review_id.cmp(&b.review_id))
            });
            VersionCorpus {
                version,
                reviews,
                index_t,
            }
        })
        .collect()
}
