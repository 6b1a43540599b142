use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{CatalogError, Task, TaskLookup};

/// A calendar day without a year, serialised as `"MM-DD"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self, CatalogError> {
        // 2000 is a leap year, so Feb 29 is accepted.
        if NaiveDate::from_ymd_opt(2000, month, day).is_none() {
            return Err(CatalogError::InvalidWindow(format!("{month:02}-{day:02}")));
        }
        Ok(Self { month, day })
    }

    pub fn of(date: NaiveDate) -> Self {
        Self { month: date.month(), day: date.day() }
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

impl FromStr for MonthDay {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, d) = s.split_once('-').ok_or_else(|| CatalogError::InvalidWindow(s.to_string()))?;
        let m = m.parse().map_err(|_| CatalogError::InvalidWindow(s.to_string()))?;
        let d = d.parse().map_err(|_| CatalogError::InvalidWindow(s.to_string()))?;
        Self::new(m, d)
    }
}

impl Serialize for MonthDay {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDay {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive `[start, end]` window; `start > end` wraps over the new year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveWindow {
    pub start: MonthDay,
    pub end: MonthDay,
}

impl ActiveWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        let d = MonthDay::of(date);
        if self.start <= self.end {
            self.start <= d && d <= self.end
        } else {
            d >= self.start || d <= self.end
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub label: String,
    pub task_ids: Vec<String>,
    #[serde(default)]
    pub active_window: Option<ActiveWindow>,
}

impl SuggestionSet {
    pub fn is_active(&self, today: NaiveDate) -> bool {
        self.active_window.is_none_or(|w| w.contains(today))
    }

    pub fn validate(&self, tasks: &dyn TaskLookup) -> Result<(), CatalogError> {
        for id in &self.task_ids {
            if tasks.task(id).is_none() {
                return Err(CatalogError::UnknownTask(id.clone()));
            }
        }
        Ok(())
    }
}

/// Up to `n` tasks drawn round-robin from the sets active on `today`
/// (window-less sets are always active). A task listed by several sets is
/// returned once.
pub fn suggest<'a>(sets: &[SuggestionSet], today: NaiveDate, n: usize, tasks: &'a dyn TaskLookup) -> Vec<&'a Task> {
    let active: Vec<&SuggestionSet> = sets.iter().filter(|s| s.is_active(today)).collect();
    let mut out: Vec<&Task> = Vec::new();
    let longest = active.iter().map(|s| s.task_ids.len()).max().unwrap_or(0);
    'outer: for pos in 0..longest {
        for set in &active {
            if out.len() >= n {
                break 'outer;
            }
            let Some(id) = set.task_ids.get(pos) else { continue };
            if out.iter().any(|t| &t.id == id) {
                continue;
            }
            if let Some(t) = tasks.task(id) {
                out.push(t);
            }
        }
    }
    out
}
