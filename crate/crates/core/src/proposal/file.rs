//! Tab-separated proposal file.
//!
//! One line per proposal: `video_id start end score p_start p_end phi`, with an
//! optional eighth `class_id` column. Lines are grouped by video and sorted by
//! score, highest first, within each video.

use std::fmt::Write as _;
use std::path::Path;

use super::candidates::mid_index;
use super::nms::{rank_order, Proposal};
use crate::error::{Error, Result};

/// Proposals grouped per video.
pub type VideoProposals = (String, Vec<Proposal>);

pub fn format_proposals(videos: &[VideoProposals]) -> String {
    let mut out = String::new();
    for (video, props) in videos {
        let mut sorted = props.clone();
        sorted.sort_by(rank_order);
        for p in &sorted {
            write!(
                out,
                "{video}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.start, p.end, p.score, p.p_start, p.p_end, p.phi
            )
            .unwrap();
            if let Some(c) = p.class_id {
                write!(out, "\t{c}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_proposals(text: &str, origin: &Path) -> Result<Vec<VideoProposals>> {
    let mut videos: Vec<VideoProposals> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |d: &str| Error::format(origin, format!("line {}: {d}", lineno + 1));
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 && f.len() != 8 {
            return Err(bad(&format!(
                "expected 7 or 8 tab-separated fields, got {}",
                f.len()
            )));
        }
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(&format!("bad index {s:?}")))
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(&format!("bad number {s:?}")))
        };
        let (start, end) = (idx(f[1])?, idx(f[2])?);
        if start >= end {
            return Err(bad("start must be before end"));
        }
        let class_id = match f.get(7) {
            Some(c) => Some(
                c.parse::<u32>()
                    .map_err(|_| bad(&format!("bad class id {c:?}")))?,
            ),
            None => None,
        };
        let p = Proposal {
            start,
            end,
            mid: mid_index(start, end),
            score: num(f[3])?,
            p_start: num(f[4])?,
            p_end: num(f[5])?,
            phi: num(f[6])?,
            class_id,
        };
        match videos.last_mut() {
            Some((id, props)) if id == f[0] => props.push(p),
            _ => {
                if videos.iter().any(|(id, _)| id == f[0]) {
                    return Err(bad(&format!("video {:?} is not contiguous", f[0])));
                }
                videos.push((f[0].to_string(), vec![p]));
            }
        }
    }
    for (_, props) in &mut videos {
        props.sort_by(rank_order);
    }
    Ok(videos)
}

pub fn write_proposals(path: &Path, videos: &[VideoProposals]) -> Result<()> {
    std::fs::write(path, format_proposals(videos))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_proposals(path: &Path) -> Result<Vec<VideoProposals>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_proposals(&text, path)
}
