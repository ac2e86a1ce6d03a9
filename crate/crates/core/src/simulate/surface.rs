//! Ruin-probability surfaces over (capital, time) grids and their CSV form.

use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Empirical ruin probabilities on a capital x time grid with standard
/// errors, built from common random numbers so both monotonicities hold
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSurface {
    pub capitals: Vec<f64>,
    pub times: Vec<f64>,
    psi: Vec<f64>,
    stderr: Vec<f64>,
    pub n_paths: u64,
}

#[derive(Debug, Error)]
pub enum SurfaceCsvError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("missing header row")]
    MissingHeader,
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl PsiSurface {
    pub(crate) fn from_ruin_bins(
        capitals: &[f64],
        times: &[f64],
        bins: &[u64],
        n_paths: u64,
    ) -> Self {
        let n = n_paths as f64;
        let mut psi = Vec::with_capacity(bins.len());
        let mut stderr = Vec::with_capacity(bins.len());
        for row in bins.chunks_exact(times.len()) {
            let mut acc = 0u64;
            for &b in row {
                acc += b;
                let p = acc as f64 / n;
                psi.push(p);
                stderr.push((p * (1.0 - p) / n).sqrt());
            }
        }
        Self { capitals: capitals.to_vec(), times: times.to_vec(), psi, stderr, n_paths }
    }

    pub fn psi_at(&self, cap_idx: usize, time_idx: usize) -> f64 {
        self.psi[cap_idx * self.times.len() + time_idx]
    }

    pub fn stderr_at(&self, cap_idx: usize, time_idx: usize) -> f64 {
        self.stderr[cap_idx * self.times.len() + time_idx]
    }

    /// Row of ruin probabilities for one capital.
    pub fn row(&self, cap_idx: usize) -> &[f64] {
        let w = self.times.len();
        &self.psi[cap_idx * w..(cap_idx + 1) * w]
    }

    pub fn stderr_row(&self, cap_idx: usize) -> &[f64] {
        let w = self.times.len();
        &self.stderr[cap_idx * w..(cap_idx + 1) * w]
    }

    pub fn capital_step(&self) -> f64 {
        if self.capitals.len() > 1 {
            self.capitals[1] - self.capitals[0]
        } else {
            1.0
        }
    }

    /// Bilinear interpolation inside the grid; clamps to the boundary rows
    /// and columns outside it.
    pub fn interp(&self, capital: f64, time: f64) -> f64 {
        let (ci, cw) = bracket(&self.capitals, capital);
        let (ti, tw) = bracket(&self.times, time);
        let f = |c: usize, t: usize| self.psi_at(c, t);
        let lo = f(ci, ti) * (1.0 - tw) + f(ci, ti + 1) * tw;
        let hi = f(ci + 1, ti) * (1.0 - tw) + f(ci + 1, ti + 1) * tw;
        lo * (1.0 - cw) + hi * cw
    }

    /// Interpolated standard error at the same lookup point.
    pub fn interp_stderr(&self, capital: f64, time: f64) -> f64 {
        let (ci, cw) = bracket(&self.capitals, capital);
        let (ti, tw) = bracket(&self.times, time);
        let f = |c: usize, t: usize| self.stderr_at(c, t);
        let lo = f(ci, ti) * (1.0 - tw) + f(ci, ti + 1) * tw;
        let hi = f(ci + 1, ti) * (1.0 - tw) + f(ci + 1, ti + 1) * tw;
        lo * (1.0 - cw) + hi * cw
    }

    /// Whether the lookup point lies inside the grid ranges.
    pub fn covers(&self, capital: f64, time: f64) -> bool {
        capital >= self.capitals[0]
            && capital <= *self.capitals.last().unwrap()
            && time >= self.times[0]
            && time <= *self.times.last().unwrap()
    }

    /// Header plus one row per (capital, time) cell, row-major by capital.
    /// Floats use the shortest round-trip form, so read_csv reproduces the
    /// surface bit-exactly.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "capital,time,psi,stderr,n_paths")?;
        for (ci, cap) in self.capitals.iter().enumerate() {
            for (ti, t) in self.times.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    cap,
                    t,
                    self.psi_at(ci, ti),
                    self.stderr_at(ci, ti),
                    self.n_paths
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self, comments: &[String]) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, comments).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parse the CSV form. Rejects malformed rows, inconsistent grids and
    /// out-of-range probabilities; never panics on hostile input.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SurfaceCsvError> {
        let mut capitals: Vec<f64> = Vec::new();
        let mut times: Vec<f64> = Vec::new();
        let mut psi = Vec::new();
        let mut stderr = Vec::new();
        let mut n_paths: Option<u64> = None;
        let mut saw_header = false;
        let mut first_block = true;
        let mut time_idx = 0usize;

        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != "capital,time,psi,stderr,n_paths" {
                    return Err(SurfaceCsvError::Malformed {
                        line: lineno,
                        msg: format!("expected column header, got `{trimmed}`"),
                    });
                }
                saw_header = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let mut next_f64 = |name: &str| -> Result<f64, SurfaceCsvError> {
                let raw = fields.next().ok_or_else(|| SurfaceCsvError::Malformed {
                    line: lineno,
                    msg: format!("missing field `{name}`"),
                })?;
                raw.trim().parse::<f64>().map_err(|_| SurfaceCsvError::Malformed {
                    line: lineno,
                    msg: format!("field `{name}` is not a number: `{raw}`"),
                })
            };
            let cap = next_f64("capital")?;
            let t = next_f64("time")?;
            let p = next_f64("psi")?;
            let se = next_f64("stderr")?;
            let n_raw = next_f64("n_paths")?;
            if fields.next().is_some() {
                return Err(SurfaceCsvError::Malformed { line: lineno, msg: "extra fields".into() });
            }
            if !cap.is_finite() || !t.is_finite() {
                return Err(SurfaceCsvError::Malformed {
                    line: lineno,
                    msg: "grid coordinates must be finite".into(),
                });
            }
            if !(0.0..=1.0).contains(&p) || !se.is_finite() || se < 0.0 {
                return Err(SurfaceCsvError::Malformed {
                    line: lineno,
                    msg: "psi must lie in [0,1] and stderr must be nonnegative".into(),
                });
            }
            if !(n_raw.is_finite() && n_raw >= 1.0 && n_raw.fract() == 0.0 && n_raw <= u64::MAX as f64)
            {
                return Err(SurfaceCsvError::Malformed {
                    line: lineno,
                    msg: "n_paths must be a positive integer".into(),
                });
            }
            let n = n_raw as u64;
            match n_paths {
                None => n_paths = Some(n),
                Some(prev) if prev != n => {
                    return Err(SurfaceCsvError::Malformed {
                        line: lineno,
                        msg: "inconsistent n_paths".into(),
                    })
                }
                _ => {}
            }

            let new_block = match capitals.last() {
                None => true,
                Some(last) if *last == cap => false,
                Some(last) if *last < cap => true,
                _ => {
                    return Err(SurfaceCsvError::Malformed {
                        line: lineno,
                        msg: "capitals must be ascending".into(),
                    })
                }
            };
            if new_block {
                if !first_block && time_idx != times.len() {
                    return Err(SurfaceCsvError::Malformed {
                        line: lineno,
                        msg: "short capital block".into(),
                    });
                }
                if capitals.is_empty() {
                    first_block = true;
                } else {
                    first_block = false;
                }
                capitals.push(cap);
                time_idx = 0;
            }
            if first_block {
                if let Some(last) = times.last() {
                    if t <= *last {
                        return Err(SurfaceCsvError::Malformed {
                            line: lineno,
                            msg: "times must be strictly ascending".into(),
                        });
                    }
                }
                times.push(t);
                time_idx = times.len();
            } else {
                if time_idx >= times.len() || times[time_idx] != t {
                    return Err(SurfaceCsvError::Malformed {
                        line: lineno,
                        msg: "time grid differs between capital blocks".into(),
                    });
                }
                time_idx += 1;
            }
            psi.push(p);
            stderr.push(se);
        }

        if !saw_header {
            return Err(SurfaceCsvError::MissingHeader);
        }
        let n_paths = n_paths.ok_or(SurfaceCsvError::Malformed {
            line: 0,
            msg: "no data rows".into(),
        })?;
        if capitals.is_empty() || times.is_empty() || time_idx != times.len() {
            return Err(SurfaceCsvError::Malformed { line: 0, msg: "incomplete grid".into() });
        }
        Ok(Self { capitals, times, psi, stderr, n_paths })
    }
}

/// Index and weight for linear interpolation, clamped to the grid range.
fn bracket(grid: &[f64], x: f64) -> (usize, f64) {
    if grid.len() == 1 || x <= grid[0] {
        return (0, 0.0);
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last - 1, 1.0);
    }
    let hi = grid.partition_point(|v| *v < x);
    let lo = hi - 1;
    (lo, (x - grid[lo]) / (grid[hi] - grid[lo]))
}
