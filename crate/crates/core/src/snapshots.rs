//! Snapshot synthesis and the on-disk snapshot format.
//!
//! A snapshot set is L independent draws z_l = sqrt(Q_l) Sigma^{1/2} u_l.
//! Per snapshot the modular variate is drawn first, then the sphere vector,
//! so a stream key pins the data bitwise. CSV layout: one row per snapshot,
//! header `l,re_1,im_1,...,re_n,im_n`, complex entries always split into
//! real and imaginary columns.

use crate::ces::{sample_unit_sphere, DensityGenerator};
use crate::linalg::hermitian_sqrt_pair;
use crate::rng::StreamKey;
use crate::{CMat, CVec, Cx, Error, Result};
use std::io::{BufRead, Write};

#[derive(Debug, Clone)]
pub struct SnapshotSet {
    n: usize,
    data: Vec<CVec>,
    generator: DensityGenerator,
    stream: StreamKey,
}

impl SnapshotSet {
    /// Dimension of each snapshot (number of sensors).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of snapshots L.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn snapshots(&self) -> &[CVec] {
        &self.data
    }

    pub fn generator(&self) -> DensityGenerator {
        self.generator
    }

    pub fn stream(&self) -> StreamKey {
        self.stream
    }

    /// Wraps externally produced snapshots (file import, tests).
    pub fn from_data(
        data: Vec<CVec>,
        generator: DensityGenerator,
        stream: StreamKey,
    ) -> Result<Self> {
        let n = data
            .first()
            .ok_or_else(|| Error::Degenerate("snapshot set is empty".into()))?
            .len();
        if n == 0 || data.iter().any(|z| z.len() != n) {
            return Err(Error::Dimension(
                "snapshots must share one nonzero dimension".into(),
            ));
        }
        Ok(Self {
            n,
            data,
            generator,
            stream,
        })
    }
}

/// Draws `l` snapshots from the CES model with scatter `sigma`.
pub fn synthesize(
    sigma: &CMat,
    l: usize,
    generator: DensityGenerator,
    stream: StreamKey,
) -> Result<SnapshotSet> {
    let (sqrt, _) = hermitian_sqrt_pair(sigma)?;
    synthesize_from_sqrt(&sqrt, l, generator, stream)
}

/// Same as [`synthesize`] but takes the Hermitian square root directly, so a
/// sweep can factor the scatter once.
pub fn synthesize_from_sqrt(
    sigma_sqrt: &CMat,
    l: usize,
    generator: DensityGenerator,
    stream: StreamKey,
) -> Result<SnapshotSet> {
    if l == 0 {
        return Err(Error::Degenerate("need at least one snapshot".into()));
    }
    generator.validate()?;
    let n = sigma_sqrt.nrows();
    let mut rng = stream.rng();
    let data = (0..l)
        .map(|_| {
            let q = generator.sample_modular(n, &mut rng);
            let u = sample_unit_sphere(n, &mut rng);
            sigma_sqrt * u * Cx::new(q.sqrt(), 0.0)
        })
        .collect();
    Ok(SnapshotSet {
        n,
        data,
        generator,
        stream,
    })
}

pub fn write_csv<W: Write>(set: &SnapshotSet, mut w: W) -> Result<()> {
    let mut header = String::from("l");
    for i in 1..=set.n {
        header.push_str(&format!(",re_{i},im_{i}"));
    }
    writeln!(w, "{header}")?;
    for (l, z) in set.data.iter().enumerate() {
        let mut row = format!("{}", l + 1);
        for zi in z.iter() {
            row.push_str(&format!(",{},{}", zi.re, zi.im));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Key = value sidecar describing how a snapshot file was produced.
pub fn write_metadata<W: Write>(set: &SnapshotSet, mut w: W) -> Result<()> {
    writeln!(w, "n = {}", set.n)?;
    writeln!(w, "snapshots = {}", set.len())?;
    writeln!(w, "family = {}", set.generator.label())?;
    if let Some((name, value)) = set.generator.parameter() {
        writeln!(w, "{name} = {value}")?;
    }
    writeln!(w, "master_seed = {}", set.stream.master_seed)?;
    writeln!(w, "sweep_index = {}", set.stream.sweep_index)?;
    writeln!(w, "trial_index = {}", set.stream.trial_index)?;
    Ok(())
}

/// Parses the snapshot CSV format; returns the sensor count and the data.
pub fn read_csv<R: BufRead>(r: R) -> Result<(usize, Vec<CVec>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("snapshot file is empty".into()))??;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "l" || (cols.len() - 1) % 2 != 0 {
        return Err(Error::Parse(format!(
            "bad snapshot header, expected `l,re_1,im_1,...`: {header}"
        )));
    }
    let n = (cols.len() - 1) / 2;
    for i in 1..=n {
        if cols[2 * i - 1] != format!("re_{i}") || cols[2 * i] != format!("im_{i}") {
            return Err(Error::Parse(format!(
                "bad snapshot header column {} / {}",
                cols[2 * i - 1],
                cols[2 * i]
            )));
        }
    }
    let mut data = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 * n + 1 {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, got {}",
                idx + 2,
                2 * n + 1,
                fields.len()
            )));
        }
        let mut z = CVec::zeros(n);
        for i in 0..n {
            let re: f64 = fields[2 * i + 1]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: {e}", idx + 2)))?;
            let im: f64 = fields[2 * i + 2]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: {e}", idx + 2)))?;
            z[i] = Cx::new(re, im);
        }
        data.push(z);
    }
    if data.is_empty() {
        return Err(Error::Parse("snapshot file has no data rows".into()));
    }
    Ok((n, data))
}
