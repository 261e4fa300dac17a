//! Line-based `key = value` configuration with `[section]` headers.
//!
//! Every accepted key has a default in [`KEYS`]; anything else is rejected.

use std::collections::BTreeMap;

use ini::{Ini, ParseOption};

use super::CliError;
use crate::families::{Complex, FamilyKind};

/// `(section, key, default)`. `auto` means "derive from the data".
pub const KEYS: &[(&str, &str, &str)] = &[
    ("julia", "family", "cubic"),
    ("julia", "degree", "3"),
    ("julia", "a", "0"),
    ("julia", "b", "0"),
    ("julia", "center", "0,0"),
    ("julia", "half_width", "auto"),
    ("julia", "resolution", "256"),
    ("julia", "depth", "500"),
    ("slice", "family", "cubic"),
    ("slice", "degree", "3"),
    ("slice", "zeta", "2"),
    ("slice", "view", "bounded"),
    ("slice", "center", "auto"),
    ("slice", "half_width", "auto"),
    ("slice", "resolution", "512"),
    ("slice", "classify_iter", "500"),
    ("slice", "prescan", "128"),
    ("slice", "zooms", "0"),
    ("slice", "zoom_factor", "4"),
    ("slice", "zoom_center", "auto"),
    ("omega", "p", "0"),
    ("omega", "q", "1"),
    ("omega", "n1", "3"),
    ("omega", "n2", "3"),
    ("omega", "beta_im_bound", "1"),
    ("omega", "synchronized", "false"),
    ("omega", "count", "12"),
    ("omega", "resolution", "512"),
    ("omega", "half_width", "auto"),
    ("dim", "target", "family"),
    ("dim", "family", "cubic"),
    ("dim", "degree", "3"),
    ("dim", "a", "0"),
    ("dim", "b", "10"),
    ("dim", "ifs_branches", "2"),
    ("dim", "ifs_ratio", "0.333333333333333333"),
    ("dim", "method", "both"),
    ("dim", "resolution", "2048"),
    ("dim", "depth", "300"),
    ("dim", "refinement", "5"),
    ("hunt", "zeta", "2"),
    ("hunt", "depth", "1"),
    ("hunt", "schedule", "0/1"),
    ("hunt", "n1", "10"),
    ("hunt", "n2", "10"),
    ("hunt", "beta_im_bound", "1"),
    ("hunt", "closeness", "0.1"),
    ("hunt", "center", "auto"),
    ("hunt", "half_width", "auto"),
    ("hunt", "prescan", "128"),
    ("hunt", "raster", "128"),
    ("hunt", "max_raster", "512"),
    ("hunt", "classify_iter", "500"),
    ("hunt", "dim_resolution", "512"),
    ("hunt", "dim_depth", "300"),
    ("hunt", "image_resolution", "128"),
    ("solve", "family", "cubic"),
    ("solve", "degree", "3"),
    ("solve", "zeta", "2"),
    ("solve", "a", "-0.5,0"),
    ("solve", "b_seed", "auto"),
    ("solve", "classify_iter", "500"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    /// explicit settings, keyed `section.key`
    values: BTreeMap<String, String>,
}

fn default_of(section: &str, key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(s, k, _)| *s == section && *k == key).map(|(_, _, d)| *d)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let opt = ParseOption { enabled_quote: false, enabled_escape: false, ..ParseOption::default() };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        let mut values = BTreeMap::new();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let Some(section) = section else {
                    return Err(CliError::Usage(format!("config: key `{key}` is outside any [section]")));
                };
                if default_of(section, key).is_none() {
                    return Err(CliError::Usage(format!("config: unknown key `{section}.{key}`")));
                }
                if props.get_all(key).count() > 1 {
                    return Err(CliError::Usage(format!("config: key `{section}.{key}` is set more than once")));
                }
                values.insert(format!("{section}.{key}"), value.trim().to_string());
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `section.key` as if it came from a file.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), CliError> {
        if default_of(section, key).is_none() {
            return Err(CliError::Usage(format!("config: unknown key `{section}.{key}`")));
        }
        self.values.insert(format!("{section}.{key}"), value.to_string());
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> &str {
        match self.values.get(&format!("{section}.{key}")) {
            Some(v) => v,
            None => default_of(section, key).unwrap_or_else(|| panic!("no such key {section}.{key}")),
        }
    }

    /// Every key of `section` with its effective value.
    pub fn echo(&self, section: &str) -> BTreeMap<String, String> {
        KEYS.iter()
            .filter(|(s, _, _)| *s == section)
            .map(|(s, k, _)| (format!("{s}.{k}"), self.raw(s, k).to_string()))
            .collect()
    }

    fn bad(section: &str, key: &str, value: &str, what: &str) -> CliError {
        CliError::Usage(format!("config: `{section}.{key}` = `{value}` is not {what}"))
    }

    fn is_auto(&self, section: &str, key: &str) -> bool {
        self.raw(section, key).eq_ignore_ascii_case("auto")
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, CliError> {
        let v = self.raw(section, key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Self::bad(section, key, v, "a finite number"))
    }

    pub fn opt_f64(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        if self.is_auto(section, key) {
            return Ok(None);
        }
        self.f64(section, key).map(Some)
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, CliError> {
        let v = self.raw(section, key);
        v.parse::<usize>().map_err(|_| Self::bad(section, key, v, "a non-negative integer"))
    }

    pub fn u32(&self, section: &str, key: &str) -> Result<u32, CliError> {
        let v = self.raw(section, key);
        v.parse::<u32>().map_err(|_| Self::bad(section, key, v, "a non-negative integer"))
    }

    pub fn i64(&self, section: &str, key: &str) -> Result<i64, CliError> {
        let v = self.raw(section, key);
        v.parse::<i64>().map_err(|_| Self::bad(section, key, v, "an integer"))
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<bool, CliError> {
        let v = self.raw(section, key);
        match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(Self::bad(section, key, v, "a boolean")),
        }
    }

    /// `re` or `re,im`.
    pub fn complex(&self, section: &str, key: &str) -> Result<Complex, CliError> {
        let v = self.raw(section, key);
        parse_complex(v).ok_or_else(|| Self::bad(section, key, v, "a complex number `re,im`"))
    }

    pub fn opt_complex(&self, section: &str, key: &str) -> Result<Option<Complex>, CliError> {
        if self.is_auto(section, key) {
            return Ok(None);
        }
        self.complex(section, key).map(Some)
    }

    pub fn family(&self, section: &str) -> Result<FamilyKind, CliError> {
        let v = self.raw(section, "family");
        FamilyKind::parse(v).ok_or_else(|| Self::bad(section, "family", v, "one of cubic, degree-d, mcmullen"))
    }

    /// `p/q` pairs separated by commas.
    pub fn schedule(&self, section: &str, key: &str) -> Result<Vec<(i64, i64)>, CliError> {
        let v = self.raw(section, key);
        let parse = |item: &str| -> Option<(i64, i64)> {
            let (p, q) = item.trim().split_once('/')?;
            Some((p.trim().parse().ok()?, q.trim().parse().ok()?))
        };
        v.split(',')
            .map(parse)
            .collect::<Option<Vec<_>>>()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Self::bad(section, key, v, "a list of p/q"))
    }
}

pub fn parse_complex(v: &str) -> Option<Complex> {
    let mut parts = v.split(',').map(str::trim);
    let re: f64 = parts.next()?.parse().ok()?;
    let im: f64 = match parts.next() {
        Some(s) => s.parse().ok()?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return None;
    }
    Some(Complex::new(re, im))
}
