//! In-process compressors used when a tool's binary is not installed, and
//! the deterministic tar packager used for single-stream tools.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use super::tools::ToolId;
use super::CorpusError;

pub fn version(tool: ToolId) -> &'static str {
    match tool {
        ToolId::Compress => "builtin-lzw16",
        ToolId::Lz4 => "builtin-lz4_flex-0.11",
        ToolId::Brotli => "builtin-brotli-8-q11",
        ToolId::Zip => "builtin-zip-2-deflate",
        ToolId::Sevenzip => "builtin-sevenz-rust-0.6-lzma2",
        _ => "none",
    }
}

/// Writes a tar holding `dir_name/` and `dir_name/file_name` with fixed
/// metadata, so the archive bytes depend only on the file contents.
pub fn write_tar(dir_name: &str, file_name: &str, content: &[u8], out: &Path) -> io::Result<()> {
    let mut builder = tar::Builder::new(BufWriter::new(File::create(out)?));
    builder.mode(tar::HeaderMode::Deterministic);

    let mut dir = tar::Header::new_gnu();
    dir.set_entry_type(tar::EntryType::Directory);
    dir.set_mode(0o755);
    dir.set_mtime(0);
    dir.set_uid(0);
    dir.set_gid(0);
    dir.set_size(0);
    builder.append_data(&mut dir, format!("{dir_name}/"), io::empty())?;

    let mut file = tar::Header::new_gnu();
    file.set_entry_type(tar::EntryType::Regular);
    file.set_mode(0o644);
    file.set_mtime(0);
    file.set_uid(0);
    file.set_gid(0);
    file.set_size(content.len() as u64);
    builder.append_data(&mut file, format!("{dir_name}/{file_name}"), content)?;

    builder.into_inner()?.flush()
}

/// Compresses `input` (a tar for stream tools, a directory for archivers)
/// into `output`.
pub fn compress(tool: ToolId, input: &Path, output: &Path) -> Result<(), CorpusError> {
    let io_err = |e: io::Error| CorpusError::Io {
        path: output.to_path_buf(),
        source: e,
    };
    match tool {
        ToolId::Compress => {
            let data = read_all(input)?;
            fs::write(output, super::lzw::compress(&data)).map_err(io_err)
        }
        ToolId::Lz4 => {
            let data = read_all(input)?;
            let info = lz4_flex::frame::FrameInfo::new()
                .block_size(lz4_flex::frame::BlockSize::Max4MB)
                .block_mode(lz4_flex::frame::BlockMode::Independent)
                .content_checksum(true);
            let mut enc = lz4_flex::frame::FrameEncoder::with_frame_info(
                info,
                BufWriter::new(File::create(output).map_err(io_err)?),
            );
            enc.write_all(&data).map_err(io_err)?;
            enc.finish()
                .map_err(|e| CorpusError::ToolFailed {
                    tool,
                    diagnostics: e.to_string(),
                })?
                .flush()
                .map_err(io_err)
        }
        ToolId::Brotli => {
            let data = read_all(input)?;
            let file = BufWriter::new(File::create(output).map_err(io_err)?);
            let mut enc = brotli::CompressorWriter::new(file, 1 << 16, 11, 24);
            enc.write_all(&data).map_err(io_err)?;
            enc.into_inner().flush().map_err(io_err)
        }
        ToolId::Zip => write_zip(input, output).map_err(|e| CorpusError::ToolFailed {
            tool,
            diagnostics: e.to_string(),
        }),
        ToolId::Sevenzip => write_7z(input, output).map_err(|e| CorpusError::ToolFailed {
            tool,
            diagnostics: e.to_string(),
        }),
        ToolId::Rar | ToolId::Gzip | ToolId::Bzip2 => Err(CorpusError::ToolNotFound {
            tool,
            reason: "no in-process implementation".into(),
        }),
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, CorpusError> {
    fs::read(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Files directly inside a staged single-document directory, sorted by name.
fn staged_files(dir: &Path) -> io::Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            let mut content = Vec::new();
            File::open(entry.path())?.read_to_end(&mut content)?;
            files.push((entry.file_name().to_string_lossy().into_owned(), content));
        }
    }
    files.sort();
    Ok(files)
}

fn dir_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn write_zip(dir: &Path, output: &Path) -> zip::result::ZipResult<()> {
    let name = dir_name(dir);
    let mut zip = zip::ZipWriter::new(File::create(output)?);
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());
    zip.add_directory(format!("{name}/"), options)?;
    for (file, content) in staged_files(dir)? {
        zip.start_file(format!("{name}/{file}"), options)?;
        zip.write_all(&content)?;
    }
    zip.finish()?;
    Ok(())
}

fn write_7z(dir: &Path, output: &Path) -> Result<(), sevenz_rust::Error> {
    let name = dir_name(dir);
    let mut writer = sevenz_rust::SevenZWriter::create(output)?;
    let mut dir_entry = sevenz_rust::SevenZArchiveEntry::new();
    dir_entry.name = name.clone();
    dir_entry.is_directory = true;
    writer.push_archive_entry::<&[u8]>(dir_entry, None)?;
    for (file, content) in staged_files(dir).map_err(sevenz_rust::Error::io)? {
        let mut entry = sevenz_rust::SevenZArchiveEntry::new();
        entry.name = format!("{name}/{file}");
        entry.has_stream = true;
        writer.push_archive_entry(entry, Some(content.as_slice()))?;
    }
    writer.finish().map_err(sevenz_rust::Error::io)?;
    Ok(())
}
