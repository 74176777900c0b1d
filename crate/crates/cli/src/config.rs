//! INI-style configuration files: `[network]`, `[sweep]`, `[output]`
//! sections with flat `key = value` lines, `#`/`;` comments. Parsed by
//! hand to keep the format dependency-free and the diagnostics exact.

use std::collections::BTreeSet;
use std::path::PathBuf;

use opagbs_core::Bipartition;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    /// (section, key, value) in file order.
    entries: Vec<(String, String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut section = String::new();
        let mut entries = Vec::new();
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CliError::config(format!(
                        "line {}: malformed section header {line:?}",
                        lineno + 1
                    )));
                }
                section = line[1..line.len() - 1].trim().to_lowercase();
                if !["network", "sweep", "output"].contains(&section.as_str()) {
                    return Err(CliError::config(format!(
                        "line {}: unknown section [{section}]",
                        lineno + 1
                    )));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "line {}: expected key = value, got {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_lowercase();
            let value = value.trim().to_string();
            if section.is_empty() {
                return Err(CliError::config(format!(
                    "line {}: key {key:?} appears before any section header",
                    lineno + 1
                )));
            }
            if !seen.insert((section.clone(), key.clone())) {
                return Err(CliError::config(format!(
                    "line {}: duplicate key {key:?} in [{section}]",
                    lineno + 1
                )));
            }
            validate_key(&section, &key, lineno + 1)?;
            entries.push((section.clone(), key, value));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::config(format!("key {key} in [{section}]: bad number {v:?}"))),
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| CliError::config(format!("key {key} in [{section}]: bad integer {v:?}"))),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn validate_key(section: &str, key: &str, lineno: usize) -> Result<(), CliError> {
    let known: &[&str] = match section {
        "network" => &["n", "d", "r", "theta", "t"],
        "sweep" => &["n", "d", "r", "theta", "t", "partitions"],
        "output" => &["path"],
        _ => &[],
    };
    if !known.contains(&key) {
        return Err(CliError::config(format!(
            "line {lineno}: unknown key {key:?} in [{section}] (known: {})",
            known.join(", ")
        )));
    }
    Ok(())
}

/// Fixed parameters of a single network evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PointParams {
    pub n: usize,
    pub d: usize,
    pub r: f64,
    pub theta: f64,
    pub t: f64,
}

/// A partition request that may depend on the mode count of the grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSpec {
    /// `(a, b)` contiguous cut; requires `a + b = n`.
    Contiguous(usize, usize),
    /// Equal contiguous cut `(n/2, n/2)`.
    Equal,
    /// Even modes vs odd modes.
    Interleaved,
}

impl PartitionSpec {
    pub fn resolve(&self, n: usize) -> Result<Bipartition, CliError> {
        match *self {
            PartitionSpec::Contiguous(a, b) => {
                if a + b != n {
                    return Err(CliError::config(format!(
                        "partition ({a},{b}) does not cover {n} modes"
                    )));
                }
                Bipartition::contiguous(n, a).map_err(|e| CliError::config(e.to_string()))
            }
            PartitionSpec::Equal => {
                Bipartition::contiguous(n, n / 2).map_err(|e| CliError::config(e.to_string()))
            }
            PartitionSpec::Interleaved => {
                Bipartition::interleaved(n).map_err(|e| CliError::config(e.to_string()))
            }
        }
    }
}

/// Parses a partition list: `(4,4),(5,3)`, `equal`, `interleaved`.
pub fn parse_partitions(text: &str) -> Result<Vec<PartitionSpec>, CliError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut token = String::new();
    let mut tokens = Vec::new();
    for ch in text.chars() {
        match ch {
            '(' => {
                depth += 1;
                token.push(ch);
            }
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| CliError::config(format!("unbalanced parens in {text:?}")))?;
                token.push(ch);
            }
            ',' if depth == 0 => {
                tokens.push(token.trim().to_string());
                token.clear();
            }
            _ => token.push(ch),
        }
    }
    if !token.trim().is_empty() {
        tokens.push(token.trim().to_string());
    }
    for tok in tokens {
        if tok.eq_ignore_ascii_case("equal") {
            out.push(PartitionSpec::Equal);
        } else if tok.eq_ignore_ascii_case("interleaved") {
            out.push(PartitionSpec::Interleaved);
        } else if tok.starts_with('(') && tok.ends_with(')') {
            let inner = &tok[1..tok.len() - 1];
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(CliError::config(format!("bad partition {tok:?}")));
            }
            let a = parts[0]
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("bad partition size {:?}", parts[0])))?;
            let b = parts[1]
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("bad partition size {:?}", parts[1])))?;
            out.push(PartitionSpec::Contiguous(a, b));
        } else {
            return Err(CliError::config(format!(
                "bad partition {tok:?} (expected (a,b), equal, or interleaved)"
            )));
        }
    }
    if out.is_empty() {
        return Err(CliError::config("empty partition list"));
    }
    Ok(out)
}

/// Parses an axis value list: comma-separated values or an inclusive
/// `start:end:step` range.
pub fn parse_axis_values(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::config(format!(
                "axis {key}: range must be start:end:step, got {text:?}"
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::config(format!("axis {key}: bad number {p:?}")))
            })
            .collect::<Result<_, _>>()?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || end < start {
            return Err(CliError::config(format!(
                "axis {key}: need start <= end and step > 0 in {text:?}"
            )));
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("axis {key}: bad number {p:?}")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::config(format!("axis {key}: empty value list")));
    }
    Ok(values)
}

/// Everything a sweep needs: per-axis value lists (singletons for fixed
/// parameters), partitions, output path.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub d_values: Vec<usize>,
    pub r_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub partitions: Vec<PartitionSpec>,
    pub output_path: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let int_axis = |key: &str, fallback: Option<usize>| -> Result<Vec<usize>, CliError> {
            if let Some(text) = raw.get("sweep", key) {
                parse_axis_values(key, text)?
                    .into_iter()
                    .map(|v| {
                        if v.fract() != 0.0 || v < 0.0 {
                            Err(CliError::config(format!("axis {key}: {v} is not a non-negative integer")))
                        } else {
                            Ok(v as usize)
                        }
                    })
                    .collect()
            } else if let Some(v) = raw.usize("network", key)? {
                Ok(vec![v])
            } else if let Some(f) = fallback {
                Ok(vec![f])
            } else {
                Err(CliError::config(format!(
                    "parameter {key} missing: set it in [network] or sweep it in [sweep]"
                )))
            }
        };
        let f64_axis = |key: &str, fallback: Option<f64>| -> Result<Vec<f64>, CliError> {
            if let Some(text) = raw.get("sweep", key) {
                parse_axis_values(key, text)
            } else if let Some(v) = raw.f64("network", key)? {
                Ok(vec![v])
            } else if let Some(f) = fallback {
                Ok(vec![f])
            } else {
                Err(CliError::config(format!(
                    "parameter {key} missing: set it in [network] or sweep it in [sweep]"
                )))
            }
        };

        let partitions = match raw.get("sweep", "partitions") {
            Some(text) => parse_partitions(text)?,
            None => vec![PartitionSpec::Equal],
        };
        Ok(Self {
            n_values: int_axis("n", None)?,
            d_values: int_axis("d", None)?,
            r_values: f64_axis("r", None)?,
            theta_values: f64_axis("theta", Some(0.0))?,
            t_values: f64_axis("t", Some(1.0))?,
            partitions,
            output_path: raw.get("output", "path").map(PathBuf::from),
        })
    }

    /// Grid points in canonical nesting order `n, d, r, theta, t`.
    pub fn grid(&self) -> Vec<PointParams> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &d in &self.d_values {
                for &r in &self.r_values {
                    for &theta in &self.theta_values {
                        for &t in &self.t_values {
                            out.push(PointParams { n, d, r, theta, t });
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let raw = RawConfig::parse(
            "# demo\n[network]\nn = 8\nd = 16\nr = 0.8\n\n[sweep]\nt = 0.6,0.7\npartitions = (4,4),(5,3)\n[output]\npath = out.csv\n",
        )
        .unwrap();
        assert_eq!(raw.usize("network", "n").unwrap(), Some(8));
        assert_eq!(raw.f64("network", "r").unwrap(), Some(0.8));
        let cfg = SweepConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.t_values, vec![0.6, 0.7]);
        assert_eq!(cfg.theta_values, vec![0.0]);
        assert_eq!(
            cfg.partitions,
            vec![PartitionSpec::Contiguous(4, 4), PartitionSpec::Contiguous(5, 3)]
        );
        assert_eq!(cfg.grid().len(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let err = RawConfig::parse("[network]\nfoo = 3\n").unwrap_err();
        assert!(err.to_string().contains("foo"));
        assert!(RawConfig::parse("[nonsense]\n").is_err());
        assert!(RawConfig::parse("n = 3\n").is_err());
        assert!(RawConfig::parse("[network]\nn = 4\nn = 6\n").is_err());
    }

    #[test]
    fn range_axis_expansion() {
        let v = parse_axis_values("d", "2:24:2").unwrap();
        assert_eq!(v.len(), 12);
        assert_eq!(v[0], 2.0);
        assert_eq!(v[11], 24.0);
        assert!(parse_axis_values("d", "5:1:1").is_err());
        assert!(parse_axis_values("d", "1:5:0").is_err());
    }

    #[test]
    fn partition_forms() {
        let p = parse_partitions("(4,4), (7,1), interleaved, equal").unwrap();
        assert_eq!(p.len(), 4);
        assert!(parse_partitions("(4,4,4)").is_err());
        assert!(parse_partitions("bogus").is_err());
        assert!(parse_partitions("").is_err());
        // n-dependent resolution
        assert!(PartitionSpec::Contiguous(4, 4).resolve(10).is_err());
        assert_eq!(PartitionSpec::Equal.resolve(10).unwrap().label(), "(5,5)");
    }
}
