//! Paired input/target layouts for image-to-image training.

use std::fs;
use std::path::{Path, PathBuf};

use super::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Mono 8-bit PNG to color LDR PNG.
    Colorization,
    /// Color LDR PNG to color `.hdr`.
    HdrReconstruction,
    /// Mono 8-bit PNG straight to color `.hdr`.
    SingleStage,
}

impl Stage {
    pub const ALL: [Stage; 3] = [
        Stage::Colorization,
        Stage::HdrReconstruction,
        Stage::SingleStage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Colorization => "colorization",
            Stage::HdrReconstruction => "hdr_reconstruction",
            Stage::SingleStage => "single_stage",
        }
    }

    fn pair(self, e: &ManifestEntry) -> (&str, &str) {
        let f = &e.files;
        match self {
            Stage::Colorization => (&f.mono_png, &f.color_ldr_png),
            Stage::HdrReconstruction => (&f.color_ldr_png, &f.color_hdr),
            Stage::SingleStage => (&f.mono_png, &f.color_hdr),
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Stage::ALL.iter().map(|st| st.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown stage {s:?} (valid stages: {})",
                    valid.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportSummary {
    pub root: PathBuf,
    pub pairs: usize,
}

fn extension(path: &str) -> &str {
    Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
}

/// Copies each entry's (input, target) files to
/// `<out>/<stage>/<split>/{input,target}/<id>.<ext>`. Every referenced file
/// is checked before anything is copied.
pub fn export_for_model(
    manifest: &DatasetManifest,
    manifest_dir: &Path,
    stage: Stage,
    out: &Path,
) -> Result<ExportSummary> {
    manifest.validate(manifest_dir)?;
    let root = out.join(stage.name());
    for e in &manifest.entries {
        let (input, target) = stage.pair(e);
        for (role, rel) in [("input", input), ("target", target)] {
            let dir = root.join(e.split.to_string()).join(role);
            fs::create_dir_all(&dir).map_err(|err| Error::io(&dir, err))?;
            let dest = dir.join(format!("{}.{}", e.id, extension(rel)));
            let src = manifest_dir.join(rel);
            fs::copy(&src, &dest).map_err(|err| Error::io(&src, err))?;
        }
    }
    Ok(ExportSummary {
        root,
        pairs: manifest.entries.len(),
    })
}
