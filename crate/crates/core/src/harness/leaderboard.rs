use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::evaluate::DatasetReport;
use crate::error::{Error, Result};
use crate::metrics::m4;

/// Which M4 aggregate ranks the table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum M4Mode {
    MeanOfM4,
    M4OfMeans,
}

impl FromStr for M4Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-of-m4" => Ok(M4Mode::MeanOfM4),
            "m4-of-means" => Ok(M4Mode::M4OfMeans),
            other => Err(Error::InvalidArgument(format!(
                "unknown M4 mode `{other}` (expected mean-of-m4 or m4-of-means)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
    pub lpips: Option<f64>,
    pub kld: f64,
    pub m4_mean_of_m4: f64,
    pub m4_of_means: f64,
    pub runtime_s: Option<f64>,
    pub runtime_64m_s: Option<f64>,
}

impl LeaderboardRow {
    /// Row from dataset-level means only; both M4 modes get the formula value.
    pub fn from_means(name: impl Into<String>, psnr: f64, ssim: f64, lpips: Option<f64>, kld: f64) -> Self {
        let v = m4(psnr, ssim, lpips.unwrap_or(0.0), kld);
        LeaderboardRow {
            name: name.into(),
            psnr,
            ssim,
            lpips,
            kld,
            m4_mean_of_m4: v,
            m4_of_means: v,
            runtime_s: None,
            runtime_64m_s: None,
        }
    }

    pub fn from_report(name: impl Into<String>, report: &DatasetReport) -> Result<Self> {
        let s = report
            .summary()
            .ok_or_else(|| Error::InvalidArgument("report has no scored images".into()))?;
        Ok(LeaderboardRow {
            name: name.into(),
            psnr: s.psnr,
            ssim: s.ssim,
            lpips: s.lpips,
            kld: s.kld,
            m4_mean_of_m4: s.m4_mean_of_m4,
            m4_of_means: s.m4_of_means,
            runtime_s: None,
            runtime_64m_s: None,
        })
    }

    pub fn m4(&self, mode: M4Mode) -> f64 {
        match mode {
            M4Mode::MeanOfM4 => self.m4_mean_of_m4,
            M4Mode::M4OfMeans => self.m4_of_means,
        }
    }
}

/// Descending by the chosen M4, then by PSNR, then by name.
pub fn rank_leaderboard(rows: &[LeaderboardRow], mode: M4Mode) -> Result<Vec<LeaderboardRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("leaderboard needs at least one row".into()));
    }
    let mut out = rows.to_vec();
    out.sort_by(|a, b| {
        b.m4(mode)
            .total_cmp(&a.m4(mode))
            .then_with(|| b.psnr.total_cmp(&a.psnr))
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(out)
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Aligned plain-text table of already ranked rows.
pub fn render_leaderboard_text(rows: &[LeaderboardRow], mode: M4Mode) -> String {
    let header = [
        "rank", "name", "M4", "M4(mean)", "M4(of means)", "PSNR", "SSIM", "LPIPS", "KLD", "time s", "64M s",
    ];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for (i, r) in rows.iter().enumerate() {
        cells.push(vec![
            (i + 1).to_string(),
            r.name.clone(),
            format!("{:.2}", r.m4(mode)),
            format!("{:.2}", r.m4_mean_of_m4),
            format!("{:.2}", r.m4_of_means),
            format!("{:.2}", r.psnr),
            format!("{:.4}", r.ssim),
            opt(r.lpips, 4),
            format!("{:.4}", r.kld),
            opt(r.runtime_s, 3),
            opt(r.runtime_64m_s, 1),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 1 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

#[derive(Serialize)]
struct RankedJson<'a> {
    mode: M4Mode,
    rows: Vec<RankedRow<'a>>,
}

#[derive(Serialize)]
struct RankedRow<'a> {
    rank: usize,
    m4: f64,
    #[serde(flatten)]
    row: &'a LeaderboardRow,
}

pub fn render_leaderboard_json(rows: &[LeaderboardRow], mode: M4Mode) -> Result<String> {
    let doc = RankedJson {
        mode,
        rows: rows
            .iter()
            .enumerate()
            .map(|(i, row)| RankedRow {
                rank: i + 1,
                m4: row.m4(mode),
                row,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}
