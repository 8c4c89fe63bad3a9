//! Compression tool identities and how each one is invoked.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;

use super::CorpusError;

/// The eight tools a corpus can be built with. Variant order is the
/// lexicographic order of the identifiers, which is the manifest sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ToolId {
    Brotli,
    Bzip2,
    Compress,
    Gzip,
    Lz4,
    Rar,
    Sevenzip,
    Zip,
}

impl ToolId {
    pub const ALL: [ToolId; 8] = [
        ToolId::Brotli,
        ToolId::Bzip2,
        ToolId::Compress,
        ToolId::Gzip,
        ToolId::Lz4,
        ToolId::Rar,
        ToolId::Sevenzip,
        ToolId::Zip,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolId::Brotli => "brotli",
            ToolId::Bzip2 => "bzip2",
            ToolId::Compress => "compress",
            ToolId::Gzip => "gzip",
            ToolId::Lz4 => "lz4",
            ToolId::Rar => "rar",
            ToolId::Sevenzip => "sevenzip",
            ToolId::Zip => "zip",
        }
    }

    /// rar, zip and 7-zip archive a directory natively; the rest compress a
    /// single stream and get a tar of the directory instead.
    pub fn packaging(self) -> Packaging {
        match self {
            ToolId::Rar | ToolId::Zip | ToolId::Sevenzip => Packaging::Directory,
            _ => Packaging::TarFirst,
        }
    }

    /// File extension appended to the compressed output.
    pub fn extension(self) -> &'static str {
        match self {
            ToolId::Brotli => "tar.br",
            ToolId::Bzip2 => "tar.bz2",
            ToolId::Compress => "tar.Z",
            ToolId::Gzip => "tar.gz",
            ToolId::Lz4 => "tar.lz4",
            ToolId::Rar => "rar",
            ToolId::Sevenzip => "7z",
            ToolId::Zip => "zip",
        }
    }

    /// Default external command line. `{input}` is the staged directory or tar
    /// (relative to the working directory), `{output}` the archive path; a
    /// template without `{output}` has its stdout captured as the archive.
    pub fn default_template(self) -> &'static str {
        match self {
            ToolId::Brotli => "brotli -c {input}",
            ToolId::Bzip2 => "bzip2 -c {input}",
            ToolId::Compress => "compress -c {input}",
            ToolId::Gzip => "gzip -n -c {input}",
            ToolId::Lz4 => "lz4 -c {input}",
            ToolId::Rar => "rar a -r {output} {input}",
            ToolId::Sevenzip => "7z a {output} {input}",
            ToolId::Zip => "zip -r {output} {input}",
        }
    }

    fn version_args(self) -> &'static [&'static str] {
        match self {
            ToolId::Rar | ToolId::Sevenzip => &[],
            ToolId::Zip => &["-v"],
            ToolId::Compress => &["-V"],
            _ => &["--version"],
        }
    }

    /// Whether an in-process implementation exists for this tool.
    pub fn has_builtin(self) -> bool {
        !matches!(self, ToolId::Rar | ToolId::Gzip | ToolId::Bzip2)
    }
}

impl fmt::Display for ToolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "7z" | "7zip" | "7-zip" => return Ok(ToolId::Sevenzip),
            "ncompress" => return Ok(ToolId::Compress),
            _ => {}
        }
        ToolId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownTool(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Packaging {
    Directory,
    TarFirst,
}

/// How a tool is run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Invocation {
    External { program: String, args: Vec<String> },
    Builtin,
}

/// Which backends resolution may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendPreference {
    /// External binary when on PATH, otherwise the in-process implementation.
    #[default]
    Auto,
    External,
    Builtin,
}

impl FromStr for BackendPreference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(BackendPreference::Auto),
            "external" => Ok(BackendPreference::External),
            "builtin" => Ok(BackendPreference::Builtin),
            other => Err(format!("unknown backend {other:?} (auto|external|builtin)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressorSpec {
    pub tool_id: ToolId,
    pub version: String,
    pub invocation: Invocation,
    pub packaging: Packaging,
}

impl CompressorSpec {
    pub fn builtin(tool_id: ToolId) -> Result<Self, CorpusError> {
        if !tool_id.has_builtin() {
            return Err(CorpusError::ToolNotFound {
                tool: tool_id,
                reason: "no in-process implementation".into(),
            });
        }
        Ok(CompressorSpec {
            tool_id,
            version: super::builtin::version(tool_id).to_string(),
            invocation: Invocation::Builtin,
            packaging: tool_id.packaging(),
        })
    }

    /// Parses a command template and checks the program can be found.
    pub fn external(tool_id: ToolId, template: &str) -> Result<Self, CorpusError> {
        let mut words = template.split_whitespace().map(str::to_string);
        let program = words.next().ok_or_else(|| CorpusError::BadTemplate {
            tool: tool_id,
            template: template.to_string(),
        })?;
        let args: Vec<String> = words.collect();
        if !args.iter().any(|a| a.contains("{input}")) {
            return Err(CorpusError::BadTemplate {
                tool: tool_id,
                template: template.to_string(),
            });
        }
        let resolved = find_on_path(&program).ok_or_else(|| CorpusError::ToolNotFound {
            tool: tool_id,
            reason: format!("{program} not found on PATH"),
        })?;
        let version = probe_version(&resolved, tool_id.version_args())
            .unwrap_or_else(|| "unknown".to_string());
        Ok(CompressorSpec {
            tool_id,
            version,
            invocation: Invocation::External { program, args },
            packaging: tool_id.packaging(),
        })
    }

    /// Picks a backend for `tool_id`, honoring a template override.
    pub fn resolve(
        tool_id: ToolId,
        preference: BackendPreference,
        template: Option<&str>,
    ) -> Result<Self, CorpusError> {
        let template = template.unwrap_or_else(|| tool_id.default_template());
        match preference {
            BackendPreference::Builtin => Self::builtin(tool_id),
            BackendPreference::External => Self::external(tool_id, template),
            BackendPreference::Auto => match Self::external(tool_id, template) {
                Ok(spec) => Ok(spec),
                Err(CorpusError::ToolNotFound { .. }) if tool_id.has_builtin() => {
                    Self::builtin(tool_id)
                }
                Err(e) => Err(e),
            },
        }
    }

    pub fn is_builtin(&self) -> bool {
        self.invocation == Invocation::Builtin
    }
}

/// Reads `tool=command template` lines; `#` starts a comment.
pub fn parse_adapter_config(text: &str) -> Result<BTreeMap<ToolId, String>, CorpusError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CorpusError::Parse(format!("adapter config line {}: expected key=value", lineno + 1))
        })?;
        out.insert(key.trim().parse()?, value.trim().to_string());
    }
    Ok(out)
}

pub fn find_on_path(program: &str) -> Option<PathBuf> {
    let candidate = Path::new(program);
    if candidate.components().count() > 1 {
        return candidate.is_file().then(|| candidate.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(program))
        .find(|p| p.is_file())
}

fn probe_version(program: &Path, args: &[&str]) -> Option<String> {
    let output = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .output()
        .ok()?;
    let mut text = String::from_utf8_lossy(&output.stdout).into_owned();
    text.push_str(&String::from_utf8_lossy(&output.stderr));
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(|l| l.replace('\t', " "))
}
