//! Named HRTF grids: the built-in head models or `.grid` files on disk.

use std::path::Path;

use earfield_core::hrtf::{HeadModel, HrtfGrid};
use earfield_core::SAMPLE_RATE_HZ;

use crate::formats::read_grid;
use crate::{Error, Result};

/// Subjects `builtin` expands to; the generic model is kept apart as the
/// estimation reference.
pub const BUILTIN_SUBJECTS: [&str; 4] = ["a", "b", "c", "d"];

pub fn builtin_grid(name: &str) -> Result<HrtfGrid> {
    let model = HeadModel::subject(name).ok_or_else(|| Error::Config(format!("unknown built-in subject {name:?}")))?;
    Ok(model.grid(SAMPLE_RATE_HZ)?)
}

fn builtin_grids(names: &[&str]) -> Result<Vec<(String, HrtfGrid)>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = names.iter().map(|n| s.spawn(move || builtin_grid(n))).collect();
        names
            .iter()
            .zip(handles)
            .map(|(n, h)| Ok((n.to_string(), h.join().expect("grid worker panicked")?)))
            .collect()
    })
}

/// Resolves an HRTF set: `builtin`, `builtin:a,c`, or a directory of
/// `.grid` files (named by file stem, in name order).
pub fn load_hrtf_set(spec: &str) -> Result<Vec<(String, HrtfGrid)>> {
    if spec == "builtin" {
        return builtin_grids(&BUILTIN_SUBJECTS);
    }
    if let Some(list) = spec.strip_prefix("builtin:") {
        let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if names.is_empty() {
            return Err(Error::Config("--hrtf-set builtin: lists no subjects".into()));
        }
        return builtin_grids(&names);
    }
    let dir = Path::new(spec);
    if !dir.is_dir() {
        return Err(Error::Config(format!("--hrtf-set {spec}: not `builtin` or a directory")));
    }
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "grid"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("--hrtf-set {spec}: no .grid files")));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, read_grid(p)?))
        })
        .collect()
}

/// A single grid argument: `builtin:<subject>` (including `builtin:generic`)
/// or a path.
pub fn load_grid_arg(arg: &str) -> Result<HrtfGrid> {
    match arg.strip_prefix("builtin:") {
        Some(name) => builtin_grid(name),
        None => read_grid(Path::new(arg)),
    }
}
