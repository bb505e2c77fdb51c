//! Stream and reference files.
//!
//! Binary stream records are 15 little-endian bytes:
//! node u8, detector u8, setting u8, tick u64, block_index u32.
//! The CSV form carries the same columns. Reference files hold a kind byte
//! followed by u64 little-endian edge ticks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::config::StreamFormat;
use crate::error::{Error, Result};
use crate::sim::{DetectionRecord, Node, Site, SiteReferences, Streams};
use crate::sync::{ReferenceKind, ReferenceSignal};

pub const RECORD_BYTES: usize = 15;
pub const CSV_HEADER: &str = "node,detector,setting,tick,block_index";

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn parse_err(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {what}", path.display()))
}

pub fn encode_record(r: &DetectionRecord) -> [u8; RECORD_BYTES] {
    let mut b = [0u8; RECORD_BYTES];
    b[0] = r.node as u8;
    b[1] = r.detector;
    b[2] = r.setting;
    b[3..11].copy_from_slice(&r.tick.to_le_bytes());
    b[11..15].copy_from_slice(&r.block_index.to_le_bytes());
    b
}

pub fn decode_record(b: &[u8]) -> Result<DetectionRecord> {
    if b.len() != RECORD_BYTES {
        return Err(Error::Io(format!("record of {} bytes", b.len())));
    }
    Ok(DetectionRecord {
        node: Node::from_u8(b[0])?,
        detector: b[1],
        setting: b[2],
        tick: u64::from_le_bytes(b[3..11].try_into().expect("8 bytes")),
        block_index: u32::from_le_bytes(b[11..15].try_into().expect("4 bytes")),
    })
}

pub fn write_stream(path: &Path, records: &[DetectionRecord], format: StreamFormat) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    match format {
        StreamFormat::Binary => {
            for r in records {
                w.write_all(&encode_record(r))
                    .map_err(|e| io_err(path, e))?;
            }
        }
        StreamFormat::Csv => {
            writeln!(w, "{CSV_HEADER}").map_err(|e| io_err(path, e))?;
            for r in records {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.node as u8, r.detector, r.setting, r.tick, r.block_index
                )
                .map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_stream(path: &Path, format: StreamFormat) -> Result<Vec<DetectionRecord>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    match format {
        StreamFormat::Binary => {
            let mut bytes = Vec::new();
            BufReader::new(f)
                .read_to_end(&mut bytes)
                .map_err(|e| io_err(path, e))?;
            if bytes.len() % RECORD_BYTES != 0 {
                return Err(parse_err(path, "truncated record"));
            }
            bytes
                .chunks_exact(RECORD_BYTES)
                .map(decode_record)
                .collect()
        }
        StreamFormat::Csv => {
            let mut out = Vec::new();
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| io_err(path, e))?;
                if n == 0 {
                    if line.trim() != CSV_HEADER {
                        return Err(parse_err(path, "unexpected CSV header"));
                    }
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 5 {
                    return Err(parse_err(
                        path,
                        format!("line {}: expected 5 columns", n + 1),
                    ));
                }
                let bad = |_| parse_err(path, format!("line {}: bad number", n + 1));
                out.push(DetectionRecord {
                    node: Node::from_u8(f[0].trim().parse().map_err(bad)?)?,
                    detector: f[1].trim().parse().map_err(bad)?,
                    setting: f[2].trim().parse().map_err(bad)?,
                    tick: f[3].trim().parse().map_err(bad)?,
                    block_index: f[4].trim().parse().map_err(bad)?,
                });
            }
            Ok(out)
        }
    }
}

pub fn write_reference(path: &Path, r: &ReferenceSignal) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    let kind = match r.kind() {
        ReferenceKind::Square10kHz => 0u8,
        ReferenceKind::Pulse1Hz => 1u8,
    };
    w.write_all(&[kind]).map_err(|e| io_err(path, e))?;
    for e in r.edges() {
        w.write_all(&e.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_reference(path: &Path) -> Result<ReferenceSignal> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    let (kind, rest) = bytes
        .split_first()
        .ok_or_else(|| parse_err(path, "empty reference file"))?;
    let kind = match kind {
        0 => ReferenceKind::Square10kHz,
        1 => ReferenceKind::Pulse1Hz,
        k => return Err(parse_err(path, format!("unknown reference kind {k}"))),
    };
    if rest.len() % 8 != 0 {
        return Err(parse_err(path, "truncated edge"));
    }
    let edges = rest
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ReferenceSignal::new(kind, edges)
}

pub fn stream_path(dir: &Path, node: Node, format: StreamFormat) -> PathBuf {
    let ext = match format {
        StreamFormat::Binary => "bin",
        StreamFormat::Csv => "csv",
    };
    dir.join(format!("stream_{}.{ext}", node.name()))
}

pub fn reference_path(dir: &Path, site: Site, kind: ReferenceKind) -> PathBuf {
    let k = match kind {
        ReferenceKind::Square10kHz => "square",
        ReferenceKind::Pulse1Hz => "pulse",
    };
    dir.join(format!("ref_{}_{k}.bin", site.name()))
}

/// Write four streams and six reference files; returns the paths written.
pub fn save_run(
    dir: &Path,
    streams: &Streams,
    refs: &[SiteReferences; 3],
    format: StreamFormat,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for node in Node::ALL {
        let p = stream_path(dir, node, format);
        write_stream(&p, streams.get(node), format)?;
        written.push(p);
    }
    for site in Site::ALL {
        let r = &refs[site as usize];
        for sig in [&r.square, &r.pulses] {
            let p = reference_path(dir, site, sig.kind());
            write_reference(&p, sig)?;
            written.push(p);
        }
    }
    Ok(written)
}

fn detect_format(dir: &Path) -> Result<StreamFormat> {
    for f in [StreamFormat::Binary, StreamFormat::Csv] {
        if stream_path(dir, Node::A, f).exists() {
            return Ok(f);
        }
    }
    Err(Error::Io(format!(
        "{}: no stream files found",
        dir.display()
    )))
}

pub fn load_streams(dir: &Path) -> Result<Streams> {
    let format = detect_format(dir)?;
    let mut v = Vec::with_capacity(4);
    for node in Node::ALL {
        v.push(read_stream(&stream_path(dir, node, format), format)?);
    }
    Streams::new(v.try_into().expect("four streams"))
}

pub fn load_references(dir: &Path) -> Result<[SiteReferences; 3]> {
    let mut v = Vec::with_capacity(3);
    for site in Site::ALL {
        v.push(SiteReferences {
            square: read_reference(&reference_path(dir, site, ReferenceKind::Square10kHz))?,
            pulses: read_reference(&reference_path(dir, site, ReferenceKind::Pulse1Hz))?,
        });
    }
    Ok(v.try_into().expect("three sites"))
}

/// Whether `dir` holds reference files (raw streams) or only aligned ones.
pub fn has_references(dir: &Path) -> bool {
    reference_path(dir, Site::A, ReferenceKind::Square10kHz).exists()
}
