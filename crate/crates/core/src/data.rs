//! Sample streams: LIBSVM and CSV readers, synthetic generators and
//! standardization.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::PathBuf;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T: Real> {
    pub x: DVector<T>,
    pub y: Option<T>,
}

impl<T: Real> Sample<T> {
    pub fn new(x: DVector<T>, y: Option<T>) -> Self {
        Sample { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_real<T: Real>(token: &str, line: usize, what: &str) -> Result<T> {
    let v: f64 = token.parse().map_err(|_| parse_error(line, format!("invalid {what} '{token}'")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite {what} '{token}'")));
    }
    Ok(T::lit(v))
}

/// Parses one LIBSVM line `<label> <idx>:<val> ...` into a dense sample of
/// dimension `dim`. Indices are 1-based and strictly increasing.
pub fn parse_libsvm_line<T: Real>(text: &str, dim: usize, line: usize) -> Result<Sample<T>> {
    let mut tokens = text.split_ascii_whitespace();
    let label = tokens.next().ok_or_else(|| parse_error(line, "empty line"))?;
    let y = parse_real(label, line, "label")?;
    let mut x = DVector::zeros(dim);
    let mut last = 0usize;
    for token in tokens {
        let (idx, val) =
            token.split_once(':').ok_or_else(|| parse_error(line, format!("expected index:value, got '{token}'")))?;
        let idx: usize = idx.parse().map_err(|_| parse_error(line, format!("invalid index '{idx}'")))?;
        if idx == 0 {
            return Err(parse_error(line, "indices are 1-based, got 0"));
        }
        if idx > dim {
            return Err(parse_error(line, format!("index {idx} exceeds dimension {dim}")));
        }
        if idx <= last {
            return Err(parse_error(line, format!("index {idx} does not increase past {last}")));
        }
        last = idx;
        x[idx - 1] = parse_real(val, line, "value")?;
    }
    Ok(Sample { x, y: Some(y) })
}

/// Line-by-line LIBSVM reader. Every line yields a sample or an error that
/// carries its 1-based line number.
pub struct LibsvmReader<R, T> {
    lines: io::Lines<R>,
    dim: usize,
    line: usize,
    _scalar: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: Real> LibsvmReader<R, T> {
    pub fn new(reader: R, dim: usize) -> Self {
        LibsvmReader { lines: reader.lines(), dim, line: 0, _scalar: std::marker::PhantomData }
    }
}

impl<R: BufRead, T: Real> Iterator for LibsvmReader<R, T> {
    type Item = Result<Sample<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        let text = self.lines.next()?;
        self.line += 1;
        Some(text.map_err(Error::from).and_then(|t| parse_libsvm_line(&t, self.dim, self.line)))
    }
}

pub fn parse_libsvm<T: Real, R: BufRead>(reader: R, dim: usize) -> LibsvmReader<R, T> {
    LibsvmReader::new(reader, dim)
}

pub fn parse_libsvm_str<T: Real>(text: &str, dim: usize) -> Result<Vec<Sample<T>>> {
    parse_libsvm(text.as_bytes(), dim).collect()
}

/// Canonical LIBSVM line: shortest round-trip formatting, nonzero entries
/// only, no trailing whitespace.
pub fn format_libsvm_line<T: Real>(sample: &Sample<T>) -> Result<String> {
    let y = sample.y.ok_or_else(|| Error::InvalidParameter("LIBSVM lines need a label".into()))?;
    let mut out = format!("{y}");
    for (i, v) in sample.x.iter().enumerate() {
        if *v != T::zero() {
            out.push_str(&format!(" {}:{v}", i + 1));
        }
    }
    Ok(out)
}

pub fn write_libsvm<T: Real, W: io::Write>(samples: &[Sample<T>], mut out: W) -> Result<()> {
    for s in samples {
        writeln!(out, "{}", format_libsvm_line(s)?)?;
    }
    Ok(())
}

/// Reads comma-separated rows. With `labeled`, the first column is the
/// label. A first row that does not parse as numbers is taken as a header.
pub fn read_csv<T: Real, R: Read>(reader: R, labeled: bool) -> Result<Vec<Sample<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    let mut dim = None;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let values = record.iter().map(|f| parse_real::<T>(f, line, "field")).collect::<Result<Vec<_>>>()?;
        let (y, x) = if labeled {
            match values.split_first() {
                Some((y, x)) => (Some(*y), x.to_vec()),
                None => return Err(parse_error(line, "missing label column")),
            }
        } else {
            (None, values)
        };
        if x.is_empty() {
            return Err(parse_error(line, "row has no features"));
        }
        match dim {
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => {
                return Err(parse_error(line, format!("expected {d} features, found {}", x.len())))
            }
            _ => {}
        }
        out.push(Sample { x: DVector::from_vec(x), y });
    }
    Ok(out)
}

fn unit_sphere_point<T: Real>(rng: &mut ChaCha8Rng) -> DVector<T> {
    loop {
        let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if norm > 1e-12 {
            return DVector::from_fn(3, |i, _| T::lit(g[i] / norm));
        }
    }
}

/// Two equiprobable classes on concentric spheres in ℝ³: radius 1 with label
/// `+1`, radius 2 with label `−1`, plus isotropic Gaussian noise of standard
/// deviation `sigma`.
pub fn gen_two_spheres<T: Real>(n: usize, sigma: T, seed: u64) -> Result<Vec<Sample<T>>> {
    if sigma < T::zero() || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level must be non-negative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let inner = rng.random_bool(0.5);
            let (radius, y) = if inner { (T::one(), T::one()) } else { (T::lit(2.0), -T::one()) };
            let mut x = unit_sphere_point::<T>(&mut rng) * radius;
            for v in x.iter_mut() {
                *v += sigma * T::lit(rng.sample::<f64, _>(StandardNormal));
            }
            Sample { x, y: Some(y) }
        })
        .collect())
}

/// Unlabeled stream whose first half lies on the spheroid
/// `(x₁/3)² + x₂² + x₃² = 1` and second half on `x₁² + (x₂/3)² + x₃² = 1`.
/// Points are unit-sphere samples stretched along the long axis.
pub fn gen_dynamic_spheroids<T: Real>(n: usize, seed: u64) -> Result<Vec<Sample<T>>> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("spheroid stream length must be even, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let mut x = unit_sphere_point::<T>(&mut rng);
            let axis = if i < n / 2 { 0 } else { 1 };
            x[axis] *= T::lit(3.0);
            Sample { x, y: None }
        })
        .collect())
}

/// Per-coordinate mean and standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer<T: Real> {
    pub mean: DVector<T>,
    pub std: DVector<T>,
}

impl<T: Real> Standardizer<T> {
    /// Coordinates with zero spread.
    pub fn constant_coordinates(&self) -> Vec<usize> {
        self.std.iter().enumerate().filter(|(_, s)| **s == T::zero()).map(|(i, _)| i).collect()
    }

    /// `(x − mean) / std`, leaving zero-spread coordinates untouched.
    pub fn apply(&self, x: &DVector<T>) -> Result<DVector<T>> {
        crate::error::check_dim(self.mean.len(), x.len())?;
        Ok(DVector::from_fn(
            x.len(),
            |i, _| {
                if self.std[i] == T::zero() {
                    x[i]
                } else {
                    (x[i] - self.mean[i]) / self.std[i]
                }
            },
        ))
    }
}

/// Fits mean and population standard deviation in two passes.
pub fn fit_standardizer<T: Real>(samples: &[Sample<T>]) -> Result<Standardizer<T>> {
    let first = samples.first().ok_or(Error::EmptyInput)?;
    let d = first.dim();
    let n = T::from_usize_lossy(samples.len());
    let mut mean = DVector::zeros(d);
    for s in samples {
        crate::error::check_dim(d, s.dim())?;
        mean += &s.x;
    }
    mean /= n;
    let mut var = DVector::zeros(d);
    for s in samples {
        let c = &s.x - &mean;
        var += c.component_mul(&c);
    }
    let std = (var / n).map(|v| v.sqrt());
    Ok(Standardizer { mean, std })
}

/// Standardizes in place. Returns the constant coordinates, which are left
/// unchanged.
pub fn standardize<T: Real>(samples: &mut [Sample<T>]) -> Result<Vec<usize>> {
    let st = fit_standardizer(samples)?;
    for s in samples.iter_mut() {
        s.x = st.apply(&s.x)?;
    }
    Ok(st.constant_coordinates())
}

/// Streaming standardizer with Welford running moments. Each sample is
/// scaled by the statistics of everything observed so far, itself included,
/// so early outputs are only approximately standardized.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStandardizer<T: Real> {
    count: usize,
    mean: DVector<T>,
    m2: DVector<T>,
}

impl<T: Real> RunningStandardizer<T> {
    pub fn new(dim: usize) -> Self {
        RunningStandardizer { count: 0, mean: DVector::zeros(dim), m2: DVector::zeros(dim) }
    }

    pub fn observe(&mut self, x: &DVector<T>) -> Result<()> {
        crate::error::check_dim(self.mean.len(), x.len())?;
        self.count += 1;
        let n = T::from_usize_lossy(self.count);
        let delta = x - &self.mean;
        self.mean += &delta / n;
        let delta2 = x - &self.mean;
        self.m2 += delta.component_mul(&delta2);
        Ok(())
    }

    pub fn snapshot(&self) -> Standardizer<T> {
        let n = T::from_usize_lossy(self.count.max(1));
        Standardizer { mean: self.mean.clone(), std: self.m2.map(|v| (v / n).sqrt()) }
    }

    pub fn observe_and_apply(&mut self, x: &DVector<T>) -> Result<DVector<T>> {
        self.observe(x)?;
        self.snapshot().apply(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    /// LIBSVM text; `-` reads standard input.
    Libsvm {
        path: PathBuf,
        dim: usize,
    },
    /// CSV text; `-` reads standard input.
    Csv {
        path: PathBuf,
        labeled: bool,
    },
    TwoSpheres {
        n: usize,
        sigma: f64,
        seed: u64,
    },
    DynamicSpheroids {
        n: usize,
        seed: u64,
    },
}

/// Where samples come from and how they are preprocessed.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamConfig {
    pub source: Source,
    pub shuffle_seed: Option<u64>,
    pub standardize: bool,
}

impl StreamConfig {
    pub fn new(source: Source) -> Self {
        StreamConfig { source, shuffle_seed: None, standardize: false }
    }

    /// Materializes the stream. Returns the samples and any constant
    /// coordinates skipped by standardization.
    pub fn load<T: Real>(&self) -> Result<(Vec<Sample<T>>, Vec<usize>)> {
        let mut samples = match &self.source {
            Source::Libsvm { path, dim } => parse_libsvm(open(path)?, *dim).collect::<Result<Vec<_>>>()?,
            Source::Csv { path, labeled } => read_csv(open(path)?, *labeled)?,
            Source::TwoSpheres { n, sigma, seed } => gen_two_spheres(*n, T::lit(*sigma), *seed)?,
            Source::DynamicSpheroids { n, seed } => gen_dynamic_spheroids(*n, *seed)?,
        };
        if let Some(seed) = self.shuffle_seed {
            samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let constant = if self.standardize && !samples.is_empty() { standardize(&mut samples)? } else { Vec::new() };
        Ok((samples, constant))
    }
}

fn open(path: &PathBuf) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        Ok(Box::new(BufReader::new(File::open(path)?)))
    }
}
