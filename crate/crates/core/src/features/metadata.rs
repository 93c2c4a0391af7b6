//! Department, position, quote and posting-time features.

use std::fs;
use std::path::Path;

use chrono::{Datelike, Timelike};

use crate::corpus::Comment;

const SPON_DEPARTMENTS: &str = include_str!("../../data/departments_spon.txt");

pub const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

/// The twelve SPON departments.
pub fn default_departments() -> Vec<String> {
    parse_departments(SPON_DEPARTMENTS)
}

pub fn parse_departments(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for d in text.lines().map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase()) {
        if !d.is_empty() && !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

pub fn departments_from_file(path: &Path) -> std::io::Result<Vec<String>> {
    Ok(parse_departments(&fs::read_to_string(path)?))
}

/// Feature names without the group-independent prefix order:
/// departments, `department_other`, position, quote, weekdays, hours.
pub fn metadata_names(departments: &[String]) -> Vec<String> {
    let mut names: Vec<String> = departments.iter().map(|d| format!("department_{d}")).collect();
    names.push("department_other".into());
    names.push("meta_position".into());
    names.push("meta_quote".into());
    names.extend(WEEKDAYS.iter().map(|d| format!("time_dow_{d}")));
    names.extend((0..24).map(|h| format!("time_hour_{h}")));
    names
}

/// Sparse values indexed like [`metadata_names`]. Absent metadata yields no entry.
pub fn metadata_features(c: &Comment, departments: &[String]) -> Vec<(usize, f64)> {
    let n = departments.len();
    let mut out = Vec::with_capacity(5);
    if let Some(dep) = &c.department {
        let dep = dep.trim().to_lowercase();
        let slot = departments.iter().position(|d| *d == dep).unwrap_or(n);
        out.push((slot, 1.0));
    }
    if let Some(p) = c.position {
        out.push((n + 1, p as f64));
    }
    if c.has_quote == Some(true) {
        out.push((n + 2, 1.0));
    }
    let dow = c.timestamp.weekday().num_days_from_monday() as usize;
    out.push((n + 3 + dow, 1.0));
    out.push((n + 10 + c.timestamp.hour() as usize, 1.0));
    out
}
