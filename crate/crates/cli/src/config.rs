//! Run configuration files: TOML with dotted sections, plus `key=value`
//! overrides applied after loading.

use std::fmt;
use std::path::Path;

use saegt::sim::RunConfig;
use toml::{Table, Value};

/// A configuration problem attributable to one key.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError {
    pub key: String,
    pub msg: String,
}

impl UsageError {
    pub fn new(key: impl Into<String>, msg: impl Into<String>) -> Self {
        UsageError { key: key.into(), msg: msg.into() }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "`{}`: {}", self.key, self.msg)
        }
    }
}

impl std::error::Error for UsageError {}

/// Parses `key=value`. The value is read as a TOML literal when possible
/// and as a bare string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value), UsageError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| UsageError::new(s, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(UsageError::new(key, "malformed key"));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

/// Sets a dotted key, creating intermediate tables.
pub fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<(), UsageError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    let mut walked = String::new();
    for p in parts {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(p);
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(UsageError::new(walked, "is not a section")),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Turns a table into a checked config. Errors name the offending key.
pub fn config_from_table(table: Table) -> Result<RunConfig, UsageError> {
    let text = toml::to_string(&table).map_err(|e| UsageError::new("", e.to_string()))?;
    let de = toml::Deserializer::new(&text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let msg = first_line(e.inner().message());
        let mut key = e.path().to_string();
        if key == "." {
            key.clear();
        }
        if let Some(field) = msg.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
            if key.is_empty() {
                key = field.to_string();
            }
        }
        UsageError::new(key, msg)
    })?;
    cfg.validate().map_err(|e| match e {
        saegt::Error::Config(msg) => match msg.split_once(": ") {
            Some((k, why)) => UsageError::new(k, why),
            None => UsageError::new("", msg),
        },
        other => UsageError::new("", other.to_string()),
    })?;
    Ok(cfg)
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").trim().to_string()
}

/// Reads `path`, applies `overrides` in order, and checks the result.
pub fn load_config(path: &Path, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| UsageError::new("", format!("{}: {}", path.display(), first_line(e.message()))))?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        set_dotted(&mut table, &k, v)?;
    }
    Ok(config_from_table(table)?)
}

pub fn config_to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configs always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
terrain = "t.grid"
seed = 3
max_iterations = 50
beta = 3.0
lipschitz = 100.0
threshold = 1000.0

[gp]
signal_variance = 1e6
length_scale = 5.0
noise_variance = 100.0

[start]
x = 5.5
y = 5.5
radius = 3.0

[goal]
x = 10.5
y = 5.5
"#;

    fn table() -> Table {
        BASE.parse().unwrap()
    }

    #[test]
    fn overrides_parse_literals_and_strings() {
        assert_eq!(parse_override("beta=0").unwrap(), ("beta".into(), Value::Integer(0)));
        assert_eq!(parse_override("gp.length_scale = 2.5").unwrap().1, Value::Float(2.5));
        assert_eq!(parse_override("terrain=a/b.grid").unwrap().1, Value::String("a/b.grid".into()));
        assert!(parse_override("beta").is_err());
        assert!(parse_override("a..b=1").is_err());
    }

    #[test]
    fn dotted_override_reaches_nested_fields() {
        let mut t = table();
        set_dotted(&mut t, "navigator.max_step", Value::Float(0.25)).unwrap();
        set_dotted(&mut t, "beta", Value::Integer(0)).unwrap();
        let cfg = config_from_table(t).unwrap();
        assert_eq!(cfg.navigator.max_step, 0.25);
        assert_eq!(cfg.beta, 0.0);
        assert_eq!(cfg.bootstrap_samples, 5);
    }

    #[test]
    fn errors_name_the_key() {
        let mut t = table();
        set_dotted(&mut t, "gp.lenght_scale", Value::Float(1.0)).unwrap();
        assert_eq!(config_from_table(t).unwrap_err().key, "gp.lenght_scale");

        let mut t = table();
        set_dotted(&mut t, "beta", Value::String("lots".into())).unwrap();
        assert_eq!(config_from_table(t).unwrap_err().key, "beta");

        let mut t = table();
        set_dotted(&mut t, "beta", Value::Float(-1.0)).unwrap();
        assert_eq!(config_from_table(t).unwrap_err().key, "beta");

        let mut t = table();
        assert_eq!(set_dotted(&mut t, "seed.x", Value::Integer(1)).unwrap_err().key, "seed");
    }

    #[test]
    fn every_field_round_trips() {
        let mut t = table();
        set_dotted(&mut t, "noise_sd", Value::Float(2.0)).unwrap();
        set_dotted(&mut t, "planner.mode", Value::String("goal-free".into())).unwrap();
        let cfg = config_from_table(t).unwrap();
        let back = config_from_table(config_to_toml(&cfg).parse().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
