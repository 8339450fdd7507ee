//! `--config` files: one `key = value` per line, `#` comments, keys named
//! after long flags (`lr = 0.005`, `weight_decay = 0`, `sep = true`).
//! Settings are spliced in right after the subcommand, so flags given on the
//! command line win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Arg, ArgAction, Command};

const GLOBAL_VALUED: [&str; 3] = ["--seed", "--config", "--out-dir"];

pub fn parse_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("config line {}: expected key = value", k + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", k + 1);
        }
        out.push((key, value.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn subcommand_position(cmd: &Command, args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(a).is_some().then_some(i);
    }
    None
}

fn find_long<'a>(cmd: &'a Command, root: &'a Command, key: &str) -> Option<&'a Arg> {
    cmd.get_arguments()
        .chain(root.get_arguments().filter(|a| a.is_global_set()))
        .find(|a| a.get_long() == Some(key))
}

/// Expands `--config FILE` into explicit flags.
pub fn expand(cmd: &Command, raw: Vec<OsString>) -> Result<Vec<String>> {
    let mut args: Vec<String> = raw
        .into_iter()
        .map(|a| {
            a.into_string()
                .map_err(|a| anyhow::anyhow!("argument {a:?} is not valid UTF-8"))
        })
        .collect::<Result<_>>()?;
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(pos) = subcommand_position(cmd, &args) else {
        return Ok(args);
    };
    let text =
        fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let sub = cmd.find_subcommand(&args[pos]).expect("checked above");
    let mut extra = Vec::new();
    for (key, value) in parse_file(&text)? {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let arg = find_long(sub, cmd, &key)
            .with_context(|| format!("config key '{key}' is not a flag of '{}'", sub.get_name()))?;
        match arg.get_action() {
            ArgAction::SetTrue => {
                let on: bool = value
                    .parse()
                    .with_context(|| format!("config key '{key}': expected true or false"))?;
                if on {
                    extra.push(format!("--{key}"));
                }
            }
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    args.splice(pos + 1..pos + 1, extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let kv = parse_file("# run\nlr = 0.5\nweight_decay=0 # none\n\nmode = \"gat\"\n").unwrap();
        assert_eq!(
            kv,
            vec![
                ("lr".to_string(), "0.5".to_string()),
                ("weight-decay".to_string(), "0".to_string()),
                ("mode".to_string(), "gat".to_string()),
            ]
        );
        assert!(parse_file("lr 0.5\n").is_err());
    }
}
