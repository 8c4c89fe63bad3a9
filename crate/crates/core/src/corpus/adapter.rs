use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, SystemTime};

use super::tools::{CompressorSpec, Invocation, Packaging};
use super::{builtin, CorpusError, SourceDocument};

/// 1980-01-01, the earliest time every archive format can store.
const FIXED_MTIME_SECS: u64 = 315_532_800;

const STAGING_DIR: &str = ".staging";
const DIAGNOSTIC_LIMIT: usize = 600;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedFile {
    /// Absolute location of the archive.
    pub path: PathBuf,
    /// Location relative to the corpus root, `/`-separated.
    pub relative: String,
    pub size: u64,
}

/// Compresses one document with one tool into `<workdir>/<tool>/<id>.<ext>`.
///
/// The document is copied into a directory named after its id; directory
/// archivers receive that directory, stream compressors a tar of it.
pub fn compress_document(
    doc: &SourceDocument,
    spec: &CompressorSpec,
    workdir: &Path,
) -> Result<CompressedFile, CorpusError> {
    let tool = spec.tool_id;
    let file_name = doc
        .path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| doc.id.clone());
    let content = fs::read(&doc.path).map_err(|e| CorpusError::io(&doc.path, e))?;

    let stage = workdir.join(STAGING_DIR).join(tool.as_str()).join(&doc.id);
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(|e| CorpusError::io(&stage, e))?;
    }
    let doc_dir = stage.join(&doc.id);
    fs::create_dir_all(&doc_dir).map_err(|e| CorpusError::io(&doc_dir, e))?;

    let input_name = match spec.packaging {
        Packaging::Directory => {
            let staged = doc_dir.join(&file_name);
            fs::write(&staged, &content).map_err(|e| CorpusError::io(&staged, e))?;
            doc.id.clone()
        }
        Packaging::TarFirst => {
            let tar_name = format!("{}.tar", doc.id);
            let tar_path = stage.join(&tar_name);
            builtin::write_tar(&doc.id, &file_name, &content, &tar_path)
                .map_err(|e| CorpusError::io(&tar_path, e))?;
            tar_name
        }
    };
    // External tools record timestamps; pin them so archives are reproducible.
    for path in [doc_dir.join(&file_name), doc_dir.clone(), stage.join(&input_name)] {
        if let Ok(f) = File::open(&path) {
            let _ = f.set_modified(SystemTime::UNIX_EPOCH + Duration::from_secs(FIXED_MTIME_SECS));
        }
    }

    let out_dir = workdir.join(tool.as_str());
    fs::create_dir_all(&out_dir).map_err(|e| CorpusError::io(&out_dir, e))?;
    let relative = format!("{}/{}.{}", tool.as_str(), doc.id, tool.extension());
    let output = workdir.join(&relative);
    if output.exists() {
        fs::remove_file(&output).map_err(|e| CorpusError::io(&output, e))?;
    }

    let result = match &spec.invocation {
        Invocation::Builtin => builtin::compress(tool, &stage.join(&input_name), &output),
        Invocation::External { program, args } => {
            run_external(spec, program, args, &stage, &input_name, &output)
        }
    };
    let _ = fs::remove_dir_all(&stage);
    result?;

    let size = fs::metadata(&output)
        .map_err(|e| CorpusError::io(&output, e))?
        .len();
    Ok(CompressedFile {
        path: output,
        relative,
        size,
    })
}

fn run_external(
    spec: &CompressorSpec,
    program: &str,
    args: &[String],
    cwd: &Path,
    input_name: &str,
    output: &Path,
) -> Result<(), CorpusError> {
    let output_str = output.to_string_lossy();
    let has_output_slot = args.iter().any(|a| a.contains("{output}"));
    let argv: Vec<String> = args
        .iter()
        .map(|a| a.replace("{input}", input_name).replace("{output}", &output_str))
        .collect();

    let mut cmd = Command::new(program);
    cmd.args(&argv)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stderr(Stdio::piped());
    if has_output_slot {
        cmd.stdout(Stdio::null());
    } else {
        let file = File::create(output).map_err(|e| CorpusError::io(output, e))?;
        cmd.stdout(Stdio::from(file));
    }
    let child = cmd.output().map_err(|e| CorpusError::ToolNotFound {
        tool: spec.tool_id,
        reason: format!("{program}: {e}"),
    })?;
    if !child.status.success() {
        let stderr = String::from_utf8_lossy(&child.stderr);
        let stderr = stderr.trim();
        let tail = &stderr[stderr.len().saturating_sub(DIAGNOSTIC_LIMIT)..];
        let _ = fs::remove_file(output);
        return Err(CorpusError::ToolFailed {
            tool: spec.tool_id,
            diagnostics: format!("{program} exited with {}: {tail}", child.status),
        });
    }
    if !output.is_file() {
        return Err(CorpusError::ToolFailed {
            tool: spec.tool_id,
            diagnostics: format!("{program} produced no output at {}", output.display()),
        });
    }
    Ok(())
}
