use alloc::vec::Vec;

use super::{
    discriminate, discriminate_cached, discriminator_backward, encode, encode_cached,
    encoder_backward, DiscriminatorNet, ModelParams, NetGrads, PreparedGraph,
};
use crate::error::{input_err, Result};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::partition::IndicatorMatrix;

/// `tanh(U Uᵀ)`.
pub fn decode(u: &DenseMatrix) -> DenseMatrix {
    u.matmul_t(u).map(math::tanh)
}

fn mean_neg_log(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    -values.map(math::ln).sum::<f64>() / n as f64
}

/// `−[Σ log(1 − D(U)_i) + Σ log D(U^(g))_i] / N`.
pub fn loss_d(disc: &DiscriminatorNet, u: &DenseMatrix, ug: &DenseMatrix) -> Result<f64> {
    if u.rows() != ug.rows() {
        return Err(input_err!(
            "embeddings have {} and {} rows",
            u.rows(),
            ug.rows()
        ));
    }
    let y_u = discriminate(disc, u)?;
    let y_g = discriminate(disc, ug)?;
    Ok(mean_neg_log(
        y_u.iter().map(|y| 1.0 - y).chain(y_g.iter().copied()),
        u.rows(),
    ))
}

/// `−(1/N) Σ log D(U)_i`.
pub fn loss_al(disc: &DiscriminatorNet, u: &DenseMatrix) -> Result<f64> {
    let y = discriminate(disc, u)?;
    Ok(mean_neg_log(y.into_iter(), u.rows()))
}

/// `‖tanh(U Uᵀ) − X‖_F²`.
pub fn loss_fr(u: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
    if x.shape() != (u.rows(), u.rows()) {
        return Err(input_err!(
            "X is {:?}, expected {n}×{n}",
            x.shape(),
            n = u.rows()
        ));
    }
    Ok(decode(u)
        .zip_map(x, |a, b| (a - b) * (a - b))
        .as_slice()
        .iter()
        .sum())
}

/// `−tr(Hᵀ tanh(U Uᵀ) H)`.
pub fn loss_cr(u: &DenseMatrix, h: &IndicatorMatrix) -> Result<f64> {
    if h.values.rows() != u.rows() {
        return Err(input_err!(
            "H has {} rows, U has {}",
            h.values.rows(),
            u.rows()
        ));
    }
    let th = decode(u).matmul(&h.values);
    Ok(-h.values.t_matmul(&th).trace())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorLoss {
    pub al: f64,
    pub fr: f64,
    pub cr: f64,
    /// `al + α fr + β cr`.
    pub total: f64,
}

impl GeneratorLoss {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.al.is_finite() && self.fr.is_finite() && self.cr.is_finite()
    }
}

/// FR and CR values plus `∂(α FR + β CR)/∂U`.
fn reconstruction_terms(
    u: &DenseMatrix,
    prep: &PreparedGraph,
    alpha: f64,
    beta: f64,
    want_grad: bool,
) -> (f64, f64, Option<DenseMatrix>) {
    let n = u.rows();
    let t = decode(u);
    let mut fr = 0.0;
    let mut cr = 0.0;
    let mut g = want_grad.then(|| DenseMatrix::zeros(n, n));
    for i in 0..n {
        let (trow, xrow, hrow) = (t.row(i), prep.x.row(i), prep.hht.row(i));
        for j in 0..n {
            let diff = trow[j] - xrow[j];
            fr += diff * diff;
            cr -= trow[j] * hrow[j];
            if let Some(g) = g.as_mut() {
                let dt = 1.0 - trow[j] * trow[j];
                g[(i, j)] = (2.0 * alpha * diff - beta * hrow[j]) * dt;
            }
        }
    }
    // G is symmetric, so ∂/∂U of Σ G∘tanh(UUᵀ) is (G + Gᵀ) U = 2 G U
    let grad = g.map(|g| {
        let mut d = g.matmul(u);
        d.scale(2.0);
        d
    });
    (fr, cr, grad)
}

fn check_prepared(model: &ModelParams, prep: &PreparedGraph) -> Result<()> {
    let l = model.generator.layers[0].fan_in();
    if prep.z.cols() != l {
        return Err(input_err!(
            "features have width {} but the generator expects {l}",
            prep.z.cols()
        ));
    }
    Ok(())
}

/// Generator objective on one prepared graph.
pub fn generator_loss(
    model: &ModelParams,
    prep: &PreparedGraph,
    alpha: f64,
    beta: f64,
) -> Result<GeneratorLoss> {
    check_prepared(model, prep)?;
    let u = encode(&model.generator, &prep.feature_op, &prep.z)?;
    let al = loss_al(&model.discriminator, &u)?;
    let (fr, cr, _) = reconstruction_terms(&u, prep, alpha, beta, false);
    Ok(GeneratorLoss {
        al,
        fr,
        cr,
        total: al + alpha * fr + beta * cr,
    })
}

/// Generator objective and its gradient w.r.t. the generator weights, with
/// the discriminator held fixed.
pub fn generator_gradients(
    model: &ModelParams,
    prep: &PreparedGraph,
    alpha: f64,
    beta: f64,
) -> Result<(GeneratorLoss, NetGrads)> {
    check_prepared(model, prep)?;
    let n = prep.num_nodes();
    let (u, enc_cache) = encode_cached(&model.generator, &prep.feature_op, &prep.z)?;
    let (y, disc_cache) = discriminate_cached(&model.discriminator, &u)?;
    let al = mean_neg_log(y.iter().copied(), n);
    let d_y: Vec<f64> = y.iter().map(|&y| -1.0 / (n as f64 * y)).collect();
    let (_, mut d_u) = discriminator_backward(&model.discriminator, &disc_cache, &d_y)?;

    let (fr, cr, d_rec) = reconstruction_terms(&u, prep, alpha, beta, true);
    d_u.add_assign(&d_rec.expect("gradient requested"));
    let grads = encoder_backward(&model.generator, &prep.feature_op, &enc_cache, &d_u)?;
    Ok((
        GeneratorLoss {
            al,
            fr,
            cr,
            total: al + alpha * fr + beta * cr,
        },
        grads,
    ))
}

/// Discriminator objective with both encoders run on one prepared graph.
pub fn discriminator_loss(model: &ModelParams, prep: &PreparedGraph) -> Result<f64> {
    check_prepared(model, prep)?;
    let u = encode(&model.generator, &prep.feature_op, &prep.z)?;
    let ug = encode(&model.generator, &prep.label_op, &prep.z)?;
    loss_d(&model.discriminator, &u, &ug)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorGrads {
    pub loss: f64,
    /// `∂L_D/∂δ_D`, what the D-step uses.
    pub discriminator: NetGrads,
    /// `∂L_D/∂δ_G` through both encoders; the D-step ignores it.
    pub generator: NetGrads,
}

pub fn discriminator_gradients(
    model: &ModelParams,
    prep: &PreparedGraph,
) -> Result<DiscriminatorGrads> {
    check_prepared(model, prep)?;
    let n = prep.num_nodes() as f64;
    let (u, cache_u) = encode_cached(&model.generator, &prep.feature_op, &prep.z)?;
    let (ug, cache_g) = encode_cached(&model.generator, &prep.label_op, &prep.z)?;
    let (y_u, dcache_u) = discriminate_cached(&model.discriminator, &u)?;
    let (y_g, dcache_g) = discriminate_cached(&model.discriminator, &ug)?;
    let loss = mean_neg_log(
        y_u.iter().map(|y| 1.0 - y).chain(y_g.iter().copied()),
        prep.num_nodes(),
    );

    let dy_u: Vec<f64> = y_u.iter().map(|&y| 1.0 / (n * (1.0 - y))).collect();
    let dy_g: Vec<f64> = y_g.iter().map(|&y| -1.0 / (n * y)).collect();
    let (mut disc, d_u) = discriminator_backward(&model.discriminator, &dcache_u, &dy_u)?;
    let (disc_g, d_ug) = discriminator_backward(&model.discriminator, &dcache_g, &dy_g)?;
    disc.add_assign(&disc_g);

    let mut gen = encoder_backward(&model.generator, &prep.feature_op, &cache_u, &d_u)?;
    gen.add_assign(&encoder_backward(
        &model.generator,
        &prep.label_op,
        &cache_g,
        &d_ug,
    )?);
    Ok(DiscriminatorGrads {
        loss,
        discriminator: disc,
        generator: gen,
    })
}
