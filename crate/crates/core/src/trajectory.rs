//! Sample records and CSV writers shared by the simulators.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// Time-stamped state of a single (possibly switched) chemostat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub r: f64,
    pub u: f64,
    pub v: f64,
    /// Environment index 1 or 2; `None` for unswitched runs.
    pub regime: Option<u8>,
}

/// Time-stamped state of the two-vessel gradostat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradostatSample {
    pub t: f64,
    pub r: [f64; 2],
    pub u: [f64; 2],
    pub v: [f64; 2],
}

/// One regime switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub from: u8,
    pub to: u8,
}

/// Fixed-width round-trip formatting (17 significant digits).
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(mut w: W, samples: &[TrajectorySample]) -> io::Result<()> {
    writeln!(w, "t,R,U,V,regime")?;
    for s in samples {
        let regime = s.regime.map(|r| r.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(s.t),
            fmt_num(s.r),
            fmt_num(s.u),
            fmt_num(s.v),
            regime
        )?;
    }
    Ok(())
}

pub fn write_gradostat_csv<W: Write>(mut w: W, samples: &[GradostatSample]) -> io::Result<()> {
    writeln!(w, "t,R1,R2,U1,U2,V1,V2")?;
    for s in samples {
        let cols = [s.t, s.r[0], s.r[1], s.u[0], s.u[1], s.v[0], s.v[1]];
        let line: Vec<String> = cols.iter().map(|&x| fmt_num(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_jumps_csv<W: Write>(mut w: W, jumps: &[Jump]) -> io::Result<()> {
    writeln!(w, "t_jump,from,to")?;
    for j in jumps {
        writeln!(w, "{},{},{}", fmt_num(j.t), j.from, j.to)?;
    }
    Ok(())
}

/// Keeps every `every`-th accepted step, plus anything explicitly forced.
#[derive(Debug, Clone)]
pub struct Recorder<S> {
    every: usize,
    counter: usize,
    pub samples: Vec<S>,
}

impl<S> Recorder<S> {
    /// `every == 0` records nothing.
    pub fn new(every: usize) -> Self {
        Self {
            every,
            counter: 0,
            samples: Vec::new(),
        }
    }

    pub fn offer(&mut self, s: S) {
        if self.every == 0 {
            return;
        }
        if self.counter % self.every == 0 {
            self.samples.push(s);
        }
        self.counter += 1;
    }

    pub fn force(&mut self, s: S) {
        if self.every != 0 {
            self.samples.push(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let s = TrajectorySample {
            t: 0.5,
            r: 1.0,
            u: 0.0,
            v: 2.0,
            regime: None,
        };
        write_trajectory_csv(&mut buf, &[s, TrajectorySample { regime: Some(2), ..s }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,R,U,V,regime");
        assert!(lines[1].ends_with(','));
        assert!(lines[2].ends_with(",2"));
        let t: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(t, 0.5);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, std::f64::consts::PI] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn recorder_thins() {
        let mut r = Recorder::new(3);
        for i in 0..10 {
            r.offer(i);
        }
        assert_eq!(r.samples, vec![0, 3, 6, 9]);
        let mut off = Recorder::new(0);
        off.offer(1);
        off.force(2);
        assert!(off.samples.is_empty());
    }
}
