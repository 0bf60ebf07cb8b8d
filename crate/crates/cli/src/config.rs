//! JSON config files merged under explicit flags.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Load a config file. Top-level keys are settings of the command being run; a section named
/// after the command overrides them, and sections of other commands are ignored.
pub fn load(path: Option<&Path>, command: &str) -> Result<Map<String, Value>, CliError> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    let Value::Object(mut top) = value else {
        return Err(CliError::Usage("config file must hold a JSON object".into()));
    };
    let section = top.remove(command);
    for name in crate::COMMANDS {
        top.remove(*name);
    }
    if let Some(section) = section {
        let Value::Object(section) = section else {
            return Err(CliError::Usage(format!("config section `{command}` must be an object")));
        };
        top.extend(section);
    }
    Ok(top)
}

/// Overlay the flags that were given onto the config values and rebuild the settings.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Map<String, Value>) -> Result<T, CliError> {
    let Value::Object(given) = serde_json::to_value(flags)? else {
        unreachable!("settings serialize to objects")
    };
    let mut merged = config;
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("invalid setting: {e}")))
}
