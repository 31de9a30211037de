//! TOML config files. Each `[subcommand]` table maps flag names to values,
//! which are spliced in as flags unless the same flag is given explicitly.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use toml::Value;

/// Removes `--config <path>` / `--config=<path>` from `args` and inserts the
/// flags from that file's `[subcommand]` table right after the subcommand.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = it.next().context("--config needs a file path")?;
            config = Some(path);
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(OsString::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    // rest[0] is the binary, rest[1] the subcommand
    let Some(sub) = rest.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        bail!("--config needs a subcommand");
    };
    let explicit: Vec<String> = rest[2..]
        .iter()
        .filter_map(|a| a.to_str())
        .filter(|a| a.starts_with("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let flags = flags_from_file(Path::new(&path), &sub)?;
    let mut out = rest[..2].to_vec();
    for pair in flags.chunks(2) {
        if !explicit.contains(&pair[0]) {
            out.extend(pair.iter().map(OsString::from));
        }
    }
    out.extend_from_slice(&rest[2..]);
    Ok(out)
}

fn flags_from_file(path: &Path, subcommand: &str) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let doc: toml::Table = text
        .parse()
        .with_context(|| format!("parsing config {}", path.display()))?;
    let Some(section) = doc.get(subcommand) else {
        return Ok(Vec::new());
    };
    let Value::Table(section) = section else {
        bail!("config entry [{subcommand}] must be a table");
    };
    let mut flags = Vec::new();
    for (key, value) in section {
        flags.push(format!("--{}", key.replace('_', "-")));
        flags.push(render(key, value)?);
    }
    Ok(flags)
}

fn render(key: &str, value: &Value) -> Result<String> {
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| render(key, v))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("config key {key:?} has an unsupported value type"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_flags_replace_config_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "[fit]\nm = 20\nlambda = 0.01\n\n[cv]\nlambdas = [0.1, 0.2]\n",
        )
        .unwrap();
        let args: Vec<OsString> = ["geverf", "fit", "--m", "30", "--config"]
            .iter()
            .map(OsString::from)
            .chain([path.clone().into_os_string()])
            .collect();
        let out: Vec<String> = expand(args)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(out, ["geverf", "fit", "--lambda", "0.01", "--m", "30"]);
        let cv = flags_from_file(&path, "cv").unwrap();
        assert_eq!(cv, ["--lambdas", "0.1,0.2"]);
    }
}
