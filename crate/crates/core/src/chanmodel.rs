//! Quasi-static Rayleigh downlink channels.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{substream, Domain};
use crate::{Error, Result};

/// K x M downlink channel; row `j` is the channel `h_j` of user `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
    gamma0: f64,
    seed: u64,
}

impl ChannelMatrix {
    /// Wraps an explicit channel. `gamma0` and `seed` are recorded as 1 and 0.
    pub fn from_entries(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidChannel("channel must be at least 1x1".into()));
        }
        if entries.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::InvalidChannel("non-finite channel entry".into()));
        }
        Ok(Self {
            entries,
            gamma0: 1.0,
            seed: 0,
        })
    }

    /// Row-major construction from `users` rows of `antennas` entries.
    pub fn from_rows(users: usize, antennas: usize, data: &[Complex64]) -> Result<Self> {
        if data.len() != users * antennas {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {users}x{antennas} channel",
                data.len()
            )));
        }
        Self::from_entries(DMatrix::from_row_slice(users, antennas, data))
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.entries.ncols()
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Channel of user `j` as an M-vector (the row `h_j`, not conjugated).
    pub fn row(&self, j: usize) -> Vec<Complex64> {
        self.entries.row(j).iter().copied().collect()
    }

    pub fn row_norm(&self, j: usize) -> f64 {
        self.entries.row(j).iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `h_j x`.
    pub fn apply_row(&self, j: usize, x: &[Complex64]) -> Complex64 {
        self.entries.row(j).iter().zip(x).map(|(h, x)| h * x).sum()
    }

    /// Channel scaled by `sqrt(factor)` in amplitude.
    pub fn scaled_power(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.map(|h| h * factor.sqrt()),
            gamma0: self.gamma0 * factor,
            seed: self.seed,
        }
    }

    /// Writes one CSV row per user with interleaved `re, im` values.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for row in self.entries.row_iter() {
            let fields: Vec<String> = row
                .iter()
                .flat_map(|h| [h.re.to_string(), h.im.to_string()])
                .collect();
            out.write_record(&fields)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`ChannelMatrix::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut antennas = None;
        let mut users = 0;
        for record in input.records() {
            let record = record?;
            if record.len() % 2 != 0 {
                return Err(Error::InvalidChannel(format!(
                    "row {} has an odd number of values",
                    users + 1
                )));
            }
            let m = record.len() / 2;
            if *antennas.get_or_insert(m) != m {
                return Err(Error::InvalidChannel(format!(
                    "row {} has {m} antennas, expected {}",
                    users + 1,
                    antennas.unwrap()
                )));
            }
            let values = record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| {
                        Error::InvalidChannel(format!("row {}: bad value {f:?}: {e}", users + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            data.extend(values.chunks(2).map(|c| Complex64::new(c[0], c[1])));
            users += 1;
        }
        Self::from_rows(users, antennas.unwrap_or(0), &data)
    }
}

/// Draws a K x M channel with i.i.d. `CN(0, gamma0)` entries.
///
/// User `j` is drawn from its own substream, so a channel is a pure function
/// of `(users, antennas, gamma0, seed)`.
pub fn generate_rayleigh(users: usize, antennas: usize, gamma0: f64, seed: u64) -> Result<ChannelMatrix> {
    if users == 0 || antennas == 0 {
        return Err(Error::InvalidChannel(format!(
            "dimensions must be positive, got K={users}, M={antennas}"
        )));
    }
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(Error::InvalidChannel(format!(
            "gamma0 must be positive, got {gamma0}"
        )));
    }
    let std = (gamma0 / 2.0).sqrt();
    let mut data = Vec::with_capacity(users * antennas);
    for j in 0..users {
        let mut rng = substream(seed, Domain::Channel, j as u64);
        for _ in 0..antennas {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            data.push(Complex64::new(std * re, std * im));
        }
    }
    Ok(ChannelMatrix {
        entries: DMatrix::from_row_slice(users, antennas, &data),
        gamma0,
        seed,
    })
}

/// Normalized cross-correlations `rho_jk = h_j h_k^H / (|h_j| |h_k|)`.
pub fn cross_correlation(channel: &ChannelMatrix) -> Result<DMatrix<Complex64>> {
    let k = channel.users();
    let norms: Vec<f64> = (0..k).map(|j| channel.row_norm(j)).collect();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroNormRow(j));
    }
    let h = channel.entries();
    let gram = h * h.adjoint();
    Ok(DMatrix::from_fn(k, k, |j, l| gram[(j, l)] / (norms[j] * norms[l])))
}
