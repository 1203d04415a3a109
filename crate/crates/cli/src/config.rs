//! `--config` JSON overrides merged under explicit flags.

use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

/// Replace every field of `args` not given on the command line by the
/// value from `file`, if present. Keys must name fields of `args`.
pub fn merge<T: Serialize + DeserializeOwned>(args: T, matches: &ArgMatches, file: Option<&Map<String, Value>>) -> Result<T, CliError> {
    let Some(file) = file else {
        return Ok(args);
    };
    let Value::Object(mut fields) = serde_json::to_value(&args).map_err(|e| CliError::Config(e.to_string()))? else {
        unreachable!("argument structs serialize to objects");
    };
    for (key, value) in file {
        if !fields.contains_key(key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        let explicit = matches.value_source(key) == Some(ValueSource::CommandLine);
        if !explicit {
            fields.insert(key.clone(), value.clone());
        }
    }
    serde_json::from_value(Value::Object(fields)).map_err(|e| CliError::Config(e.to_string()))
}
