//! Named-tensor checkpoint files.
//!
//! A checkpoint is a sequence of sections, each a text header line
//! `name rows cols\n` followed by `rows·cols` little-endian `f64` values in
//! row-major order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use lintsf::linalg::Matrix;
use lintsf::models::{Architecture, ForecastModel, Normalization, RevinAffine};
use lintsf::solvers::ClosedFormSolution;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub value: Matrix,
}

impl Tensor {
    fn new(name: &str, value: Matrix) -> Self {
        Self {
            name: name.to_string(),
            value,
        }
    }

    fn row(name: &str, v: &[f64]) -> Self {
        Self::new(
            name,
            Matrix::from_vec(1, v.len(), v.to_vec()).expect("row shape"),
        )
    }
}

/// Tensors of `model` in the order of [`ForecastModel::params`].
pub fn model_tensors(model: &ForecastModel) -> Vec<Tensor> {
    let mut out = Vec::new();
    match &model.arch {
        Architecture::Linear(l) => {
            out.push(Tensor::new("weight", l.weight.clone()));
            out.push(Tensor::row("bias", &l.bias));
        }
        Architecture::DLinear(d) => {
            out.push(Tensor::new("seasonal.weight", d.seasonal.weight.clone()));
            out.push(Tensor::row("seasonal.bias", &d.seasonal.bias));
            out.push(Tensor::new("trend.weight", d.trend.weight.clone()));
            out.push(Tensor::row("trend.bias", &d.trend.bias));
        }
        Architecture::Fits(f) => {
            out.push(Tensor::new("weight.re", f.weight.re()));
            out.push(Tensor::new("weight.im", f.weight.im()));
            let re: Vec<f64> = f.bias.iter().map(|c| c.re).collect();
            let im: Vec<f64> = f.bias.iter().map(|c| c.im).collect();
            out.push(Tensor::row("bias.re", &re));
            out.push(Tensor::row("bias.im", &im));
        }
    }
    if let Normalization::RevIn { affine, .. } = &model.norm {
        match affine {
            RevinAffine::Scalar { alpha, beta } => {
                out.push(Tensor::row("revin.alpha", &[*alpha]));
                out.push(Tensor::row("revin.beta", &[*beta]));
            }
            RevinAffine::PerPosition {
                alpha_in,
                beta_in,
                alpha_out,
                beta_out,
            } => {
                out.push(Tensor::row("revin.alpha_in", alpha_in));
                out.push(Tensor::row("revin.beta_in", beta_in));
                out.push(Tensor::row("revin.alpha_out", alpha_out));
                out.push(Tensor::row("revin.beta_out", beta_out));
            }
        }
    }
    out
}

pub fn solution_tensors(sol: &ClosedFormSolution) -> Vec<Tensor> {
    vec![
        Tensor::new("weight", sol.weight.clone()),
        Tensor::row("bias", &sol.bias),
    ]
}

/// Loads the tensors into a model of the same shape as `template`.
pub fn restore(template: &ForecastModel, tensors: &[Tensor]) -> Result<ForecastModel> {
    let expected = model_tensors(template);
    if expected.len() != tensors.len() {
        bail!(
            "checkpoint has {} tensors, model needs {}",
            tensors.len(),
            expected.len()
        );
    }
    let mut params = Vec::with_capacity(template.num_params());
    for (e, t) in expected.iter().zip(tensors) {
        if e.name != t.name || e.value.shape() != t.value.shape() {
            bail!(
                "tensor `{}` {:?} does not match expected `{}` {:?}",
                t.name,
                t.value.shape(),
                e.name,
                e.value.shape()
            );
        }
        params.extend_from_slice(t.value.as_slice());
    }
    let mut m = template.clone();
    m.set_params(&params)?;
    Ok(m)
}

pub fn write_tensors(mut w: impl Write, tensors: &[Tensor]) -> std::io::Result<()> {
    for t in tensors {
        let (r, c) = t.value.shape();
        writeln!(w, "{} {r} {c}", t.name)?;
        for v in t.value.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_tensors(r: impl Read) -> Result<Vec<Tensor>> {
    let mut r = BufReader::new(r);
    let mut out = Vec::new();
    loop {
        let mut header = Vec::new();
        if r.read_until(b'\n', &mut header)? == 0 {
            break;
        }
        let line = std::str::from_utf8(&header)
            .context("checkpoint header is not text")?
            .trim_end_matches('\n');
        let mut parts = line.split(' ');
        let (Some(name), Some(rows), Some(cols), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            bail!("malformed checkpoint header `{line}`");
        };
        let rows: usize = rows.parse().with_context(|| format!("header `{line}`"))?;
        let cols: usize = cols.parse().with_context(|| format!("header `{line}`"))?;
        let mut data = vec![0.0; rows * cols];
        let mut buf = [0u8; 8];
        for v in &mut data {
            r.read_exact(&mut buf)
                .with_context(|| format!("truncated payload of `{name}`"))?;
            *v = f64::from_le_bytes(buf);
        }
        out.push(Tensor::new(name, Matrix::from_vec(rows, cols, data)?));
    }
    Ok(out)
}

pub fn save(path: &Path, tensors: &[Tensor]) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(f);
    write_tensors(&mut w, tensors)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<Tensor>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_tensors(f)
}
