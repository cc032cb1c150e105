//! Local canonicalization of fuzzy values: relative dates, clock times and money.
//!
//! Nothing here calls out of process. Anything outside the supported grammar
//! comes back as an unresolved passthrough that carries the raw text unchanged.

use std::sync::LazyLock;

use chrono::{DateTime, Datelike, Days, FixedOffset, Local, NaiveDate, Weekday};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::schema::{SlotDef, ValueKind};

pub(crate) const WEEKDAY_PATTERN: &str =
    r"mon(?:day)?|tue(?:s|sday)?|wed(?:nesday)?|thu(?:rs|rsday)?|fri(?:day)?|sat(?:urday)?|sun(?:day)?";
pub(crate) const MONTH_PATTERN: &str = r"jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t|tember)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?";
pub(crate) const ORDINAL_SUFFIX: &str = r"(?:st|nd|rd|th)?";

/// Week-start convention, used for whole-week expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locale {
    #[default]
    MondayStart,
    SundayStart,
}

impl Locale {
    fn week_start(self) -> Weekday {
        match self {
            Locale::MondayStart => Weekday::Mon,
            Locale::SundayStart => Weekday::Sun,
        }
    }
}

/// The instant relative expressions are resolved against (normally the session start).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceContext {
    pub reference_datetime: DateTime<FixedOffset>,
    #[serde(default)]
    pub locale: Locale,
}

impl ReferenceContext {
    pub fn new(reference_datetime: DateTime<FixedOffset>) -> Self {
        Self {
            reference_datetime,
            locale: Locale::default(),
        }
    }

    /// Current time in the host's timezone.
    pub fn host_now() -> Self {
        Self::new(Local::now().fixed_offset())
    }

    /// Midday on `date` at the given UTC offset (seconds east).
    pub fn from_date(date: NaiveDate, offset_secs: i32) -> Self {
        let offset = FixedOffset::east_opt(offset_secs).expect("offset within a day");
        let naive = date.and_hms_opt(12, 0, 0).expect("valid time");
        Self::new(naive.and_local_timezone(offset).single().expect("fixed offsets are unambiguous"))
    }

    pub fn date(&self) -> NaiveDate {
        self.reference_datetime.date_naive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizedKind {
    Date,
    DateRange,
    Time,
    Money,
    Passthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Exact,
    Inferred,
    Unresolved,
}

/// Canonical forms: `YYYY-MM-DD`, `YYYY-MM-DD/YYYY-MM-DD`, `HH:MM`, `<minor units> <ISO-4217>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedValue {
    pub kind: NormalizedKind,
    pub canonical: String,
    pub confidence: Confidence,
}

impl NormalizedValue {
    pub fn unresolved(raw: &str) -> Self {
        Self {
            kind: NormalizedKind::Passthrough,
            canonical: raw.to_string(),
            confidence: Confidence::Unresolved,
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.confidence != Confidence::Unresolved
    }

    fn date(d: NaiveDate, confidence: Confidence) -> Self {
        Self {
            kind: NormalizedKind::Date,
            canonical: d.format("%Y-%m-%d").to_string(),
            confidence,
        }
    }
}

/// Normalizes `raw` according to the slot's value kind.
pub fn normalize_for_slot(slot: &SlotDef, raw: &str, ctx: &ReferenceContext) -> NormalizedValue {
    match slot.value_kind {
        ValueKind::Date => normalize_date(raw, ctx),
        ValueKind::Time => normalize_time(raw, ctx),
        ValueKind::Money => normalize_money(raw, ctx),
        ValueKind::Category => {
            let needle = clean(raw);
            slot.category_options
                .iter()
                .flatten()
                .find(|opt| {
                    let opt = opt.to_lowercase();
                    opt == needle || needle.split_whitespace().any(|w| w == opt)
                })
                .map(|opt| NormalizedValue {
                    kind: NormalizedKind::Passthrough,
                    canonical: opt.clone(),
                    confidence: Confidence::Exact,
                })
                .unwrap_or_else(|| NormalizedValue::unresolved(raw))
        }
        ValueKind::FreeText | ValueKind::Location => NormalizedValue {
            kind: NormalizedKind::Passthrough,
            canonical: raw.to_string(),
            confidence: Confidence::Exact,
        },
    }
}

fn clean(raw: &str) -> String {
    raw.trim()
        .trim_end_matches(['.', ',', '!', '?', ';'])
        .trim()
        .to_lowercase()
}

pub(crate) fn parse_weekday(word: &str) -> Option<Weekday> {
    let w = word.to_ascii_lowercase();
    let day = match w.get(..3)? {
        "mon" => Weekday::Mon,
        "tue" => Weekday::Tue,
        "wed" => Weekday::Wed,
        "thu" => Weekday::Thu,
        "fri" => Weekday::Fri,
        "sat" => Weekday::Sat,
        "sun" => Weekday::Sun,
        _ => return None,
    };
    Some(day)
}

fn parse_month(word: &str) -> Option<u32> {
    let w = word.to_ascii_lowercase();
    let m = match w.get(..3)? {
        "jan" => 1,
        "feb" => 2,
        "mar" => 3,
        "apr" => 4,
        "may" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "oct" => 10,
        "nov" => 11,
        "dec" => 12,
        _ => return None,
    };
    Some(m)
}

fn parse_small_number(word: &str) -> Option<u64> {
    if let Ok(n) = word.parse() {
        return Some(n);
    }
    let n = match word {
        "a" | "an" | "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "fourteen" => 14,
        "thirty" => 30,
        _ => return None,
    };
    Some(n)
}

/// First `target` weekday strictly after `from` (1 to 7 days ahead).
pub fn next_weekday_after(from: NaiveDate, target: Weekday) -> NaiveDate {
    let ahead = (7 + target.num_days_from_monday() as i64 - from.weekday().num_days_from_monday() as i64) % 7;
    let ahead = if ahead == 0 { 7 } else { ahead };
    from + Days::new(ahead as u64)
}

static ISO_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static ISO_RANGE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{4}-\d{2}-\d{2})/(\d{4}-\d{2}-\d{2})$").unwrap());
static WEEKDAY_EXPR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^(?:(next|this|coming)\s+)?({WEEKDAY_PATTERN})(?:\s*,?\s+the\s+(\d{{1,2}}){ORDINAL_SUFFIX})?$"
    ))
    .unwrap()
});
static IN_N: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^in\s+(\d+|[a-z]+)\s+(days?|weeks?)$").unwrap());
static MONTH_DAY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^(?:(?:{WEEKDAY_PATTERN}),?\s+)?({MONTH_PATTERN})\.?\s+(\d{{1,2}}){ORDINAL_SUFFIX}(?:,?\s+(\d{{4}}))?$"
    ))
    .unwrap()
});
static DAY_MONTH: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^(?:the\s+)?(\d{{1,2}}){ORDINAL_SUFFIX}\s+(?:of\s+)?({MONTH_PATTERN})\.?(?:,?\s+(\d{{4}}))?$"
    ))
    .unwrap()
});
static NUMERIC_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})/(\d{1,2})(?:/(\d{2}|\d{4}))?$").unwrap());
static MONTH_DAY_RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^({MONTH_PATTERN})\.?\s+(\d{{1,2}}){ORDINAL_SUFFIX}\s*(?:-|–|to|through)\s*(\d{{1,2}}){ORDINAL_SUFFIX}(?:,?\s+(\d{{4}}))?$"
    ))
    .unwrap()
});
static RANGE_SPLIT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:from\s+)?(.+?)\s+(?:-|–|to|through|until|and)\s+(.+)$").unwrap());

/// Resolves a date expression against `ctx`.
///
/// Forward-looking weekday phrases use the strictly-after rule: "next Friday"
/// said on a Friday is seven days ahead. "this <weekday>" and a bare weekday
/// resolve the same way but are marked [`Confidence::Inferred`].
pub fn normalize_date(raw: &str, ctx: &ReferenceContext) -> NormalizedValue {
    let text = clean(raw);
    if text.is_empty() {
        return NormalizedValue::unresolved(raw);
    }
    if let Some((d, c)) = resolve_single_date(&text, ctx) {
        return NormalizedValue::date(d, c);
    }
    if let Some((start, end, c)) = resolve_date_range(&text, ctx) {
        return NormalizedValue {
            kind: NormalizedKind::DateRange,
            canonical: format!("{}/{}", start.format("%Y-%m-%d"), end.format("%Y-%m-%d")),
            confidence: c,
        };
    }
    NormalizedValue::unresolved(raw)
}

fn resolve_single_date(text: &str, ctx: &ReferenceContext) -> Option<(NaiveDate, Confidence)> {
    let today = ctx.date();
    let text = text.strip_prefix("on ").unwrap_or(text);
    match text {
        "today" => return Some((today, Confidence::Exact)),
        "tomorrow" => return Some((today.succ_opt()?, Confidence::Exact)),
        "yesterday" => return Some((today.pred_opt()?, Confidence::Exact)),
        "the day after tomorrow" | "day after tomorrow" => {
            return Some((today + Days::new(2), Confidence::Exact))
        }
        _ => {}
    }
    if let Some(c) = ISO_DATE.captures(text) {
        let d = NaiveDate::from_ymd_opt(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?)?;
        return Some((d, Confidence::Exact));
    }
    if let Some(c) = WEEKDAY_EXPR.captures(text) {
        let target = parse_weekday(&c[2])?;
        if let Some(day) = c.get(3) {
            // "<weekday> the Nth": first date after the reference that matches both.
            let dom: u32 = day.as_str().parse().ok()?;
            let mut d = today.succ_opt()?;
            for _ in 0..800 {
                if d.day() == dom && d.weekday() == target {
                    return Some((d, Confidence::Exact));
                }
                d = d.succ_opt()?;
            }
            return None;
        }
        let confidence = match c.get(1).map(|m| m.as_str()) {
            Some("next") | Some("coming") => Confidence::Exact,
            _ => Confidence::Inferred,
        };
        return Some((next_weekday_after(today, target), confidence));
    }
    if let Some(c) = IN_N.captures(text) {
        let n = parse_small_number(&c[1])?;
        let days = if c[2].starts_with("week") { n * 7 } else { n };
        return Some((today + Days::new(days), Confidence::Exact));
    }
    let month_day = MONTH_DAY
        .captures(text)
        .map(|c| (parse_month(&c[1]), c[2].parse::<u32>().ok(), c.get(3).map(|m| m.as_str().to_string())))
        .or_else(|| {
            DAY_MONTH.captures(text).map(|c| {
                (parse_month(&c[2]), c[1].parse::<u32>().ok(), c.get(3).map(|m| m.as_str().to_string()))
            })
        });
    if let Some((Some(month), Some(day), year)) = month_day {
        return resolve_month_day(month, day, year.as_deref(), today);
    }
    if let Some(c) = NUMERIC_DATE.captures(text) {
        let month: u32 = c[1].parse().ok()?;
        let day: u32 = c[2].parse().ok()?;
        let year = c.get(3).map(|m| {
            let y = m.as_str();
            if y.len() == 2 {
                format!("20{y}")
            } else {
                y.to_string()
            }
        });
        return resolve_month_day(month, day, year.as_deref(), today);
    }
    None
}

fn resolve_month_day(month: u32, day: u32, year: Option<&str>, today: NaiveDate) -> Option<(NaiveDate, Confidence)> {
    match year {
        Some(y) => NaiveDate::from_ymd_opt(y.parse().ok()?, month, day).map(|d| (d, Confidence::Exact)),
        None => {
            // Next occurrence on or after the reference date.
            let this_year = NaiveDate::from_ymd_opt(today.year(), month, day);
            match this_year {
                Some(d) if d >= today => Some((d, Confidence::Inferred)),
                _ => NaiveDate::from_ymd_opt(today.year() + 1, month, day).map(|d| (d, Confidence::Inferred)),
            }
        }
    }
}

fn resolve_date_range(text: &str, ctx: &ReferenceContext) -> Option<(NaiveDate, NaiveDate, Confidence)> {
    if let Some(c) = ISO_RANGE.captures(text) {
        let (a, _) = resolve_single_date(&c[1], ctx)?;
        let (b, _) = resolve_single_date(&c[2], ctx)?;
        return (a <= b).then_some((a, b, Confidence::Exact));
    }
    if matches!(text, "next week" | "this week") {
        let today = ctx.date();
        let start_day = ctx.locale.week_start();
        let start = if text == "next week" {
            next_weekday_after(today, start_day)
        } else {
            let back = (7 + today.weekday().num_days_from_monday() as i64
                - start_day.num_days_from_monday() as i64)
                % 7;
            today - Days::new(back as u64)
        };
        return Some((start, start + Days::new(6), Confidence::Inferred));
    }
    if let Some(c) = MONTH_DAY_RANGE.captures(text) {
        let month = parse_month(&c[1])?;
        let year = c.get(4).map(|m| m.as_str());
        let (a, ca) = resolve_month_day(month, c[2].parse().ok()?, year, ctx.date())?;
        let (b, cb) = resolve_month_day(month, c[3].parse().ok()?, Some(&a.year().to_string()), ctx.date())?;
        return (a <= b).then_some((a, b, ca.max(cb)));
    }
    let c = RANGE_SPLIT.captures(text)?;
    let (a, ca) = resolve_single_date(&c[1], ctx)?;
    let (b, cb) = resolve_single_date(&c[2], ctx)?;
    (a <= b).then_some((a, b, ca.max(cb)))
}

static AMPM_TIME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})(?::(\d{2}))?\s*([ap])\.?\s*m\.?$").unwrap());
static CLOCK_TIME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2}):(\d{2})$").unwrap());
static OCLOCK_TIME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2})\s*o'?clock$").unwrap());

/// Resolves `h am/pm`, `h:mm am/pm`, `h:mm`, `noon` and `midnight` to `HH:MM`.
pub fn normalize_time(raw: &str, _ctx: &ReferenceContext) -> NormalizedValue {
    let text = clean(raw);
    let text = text.strip_prefix("at ").unwrap_or(&text);
    let resolved = match text {
        "noon" | "midday" => Some((12, 0, Confidence::Exact)),
        "midnight" => Some((0, 0, Confidence::Exact)),
        _ => {
            if let Some(c) = AMPM_TIME.captures(text) {
                let hour: u32 = c[1].parse().unwrap_or(99);
                let minute: u32 = c.get(2).map_or(Some(0), |m| m.as_str().parse().ok()).unwrap_or(99);
                if (1..=12).contains(&hour) && minute < 60 {
                    let pm = &c[3] == "p";
                    let h24 = match (hour, pm) {
                        (12, false) => 0,
                        (12, true) => 12,
                        (h, false) => h,
                        (h, true) => h + 12,
                    };
                    Some((h24, minute, Confidence::Exact))
                } else {
                    None
                }
            } else if let Some(c) = CLOCK_TIME.captures(text) {
                let hour: u32 = c[1].parse().unwrap_or(99);
                let minute: u32 = c[2].parse().unwrap_or(99);
                (hour < 24 && minute < 60).then_some((hour, minute, Confidence::Exact))
            } else if let Some(c) = OCLOCK_TIME.captures(text) {
                let hour: u32 = c[1].parse().unwrap_or(99);
                (1..=12).contains(&hour).then_some((hour, 0, Confidence::Inferred))
            } else {
                None
            }
        }
    };
    match resolved {
        Some((h, m, confidence)) => NormalizedValue {
            kind: NormalizedKind::Time,
            canonical: format!("{h:02}:{m:02}"),
            confidence,
        },
        None => NormalizedValue::unresolved(raw),
    }
}

static CANONICAL_MONEY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+) ([A-Z]{3})$").unwrap());
static DOLLAR_SIGN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\$\s*(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d{2}))?$").unwrap());
static DOLLAR_WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d{2}))?\s*(?:dollars?|bucks)$").unwrap()
});
static BARE_DECIMAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,3}(?:,\d{3})+|\d+)\.(\d{2})$").unwrap());

/// Resolves `$N`, `N dollars` and `N.MM` to integer minor units plus currency code.
///
/// The canonical form `"<minor> <CODE>"` (e.g. `12550 USD`) is itself accepted,
/// which keeps normalization idempotent.
pub fn normalize_money(raw: &str, _ctx: &ReferenceContext) -> NormalizedValue {
    let trimmed = raw.trim();
    if let Some(c) = CANONICAL_MONEY.captures(trimmed) {
        if let Ok(minor) = c[1].parse::<u64>() {
            return money(minor, &c[2], Confidence::Exact);
        }
    }
    let text = clean(raw);
    let (captures, confidence) = if let Some(c) = DOLLAR_SIGN.captures(&text) {
        (c, Confidence::Exact)
    } else if let Some(c) = DOLLAR_WORD.captures(&text) {
        (c, Confidence::Exact)
    } else if let Some(c) = BARE_DECIMAL.captures(&text) {
        (c, Confidence::Inferred)
    } else {
        return NormalizedValue::unresolved(raw);
    };
    let whole: Option<u64> = captures[1].replace(',', "").parse().ok();
    let cents: u64 = captures.get(2).map_or(0, |m| m.as_str().parse().unwrap_or(0));
    match whole.and_then(|w| w.checked_mul(100)).and_then(|w| w.checked_add(cents)) {
        Some(minor) => money(minor, "USD", confidence),
        None => NormalizedValue::unresolved(raw),
    }
}

fn money(minor: u64, currency: &str, confidence: Confidence) -> NormalizedValue {
    NormalizedValue {
        kind: NormalizedKind::Money,
        canonical: format!("{minor} {currency}"),
        confidence,
    }
}
