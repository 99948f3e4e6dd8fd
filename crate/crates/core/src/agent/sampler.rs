use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::pooling::WeightLedger;
use crate::student::{LabeledDataset, MiniBatch};

/// Dense reward on the change of reward-slice performance; changes inside
/// the dead band count as zero.
pub fn reward(current: f64, previous: f64, deadband: f64) -> f64 {
    let delta = current - previous;
    if delta.abs() <= deadband {
        0.0
    } else {
        delta
    }
}

fn check_action(action: &[f64]) -> Result<()> {
    if action.is_empty() {
        return Err(Error::Empty("action"));
    }
    if action.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::invalid("action must be a finite non-negative vector"));
    }
    let total: f64 = action.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("action sums to {total}, not 1")));
    }
    Ok(())
}

/// Per-class counts for a batch of `batch_size`.
///
/// Each class first gets `floor(batch_size * a_i)`. The leftover slots go to
/// classes with probability equal to their fractional remainders
/// (systematic sampling), so the expected count of class `i` is exactly
/// `batch_size * a_i`. Slots a class cannot fill are handed to the others.
pub fn class_quotas(action: &[f64], batch_size: usize, capacities: &[usize], rng: &mut Rng) -> Result<Vec<usize>> {
    check_action(action)?;
    if capacities.len() != action.len() {
        return Err(Error::Shape {
            context: "class capacities",
            expected: (action.len(), 1),
            actual: (capacities.len(), 1),
        });
    }
    let room: usize = capacities.iter().sum();
    if batch_size > room {
        return Err(Error::invalid(format!(
            "batch of {batch_size} exceeds the {room} available samples"
        )));
    }
    let mut quotas = vec![0usize; action.len()];
    let mut open: Vec<usize> = (0..action.len()).filter(|&i| capacities[i] > 0).collect();
    let mut left = batch_size;
    while left > 0 {
        let mut weights: Vec<f64> = open.iter().map(|&i| action[i]).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            weights = open.iter().map(|&i| (capacities[i] - quotas[i]) as f64).collect();
        }
        let total: f64 = weights.iter().sum();
        let shares = apportion(&weights.iter().map(|w| w / total).collect::<Vec<_>>(), left, rng);
        let mut overflow = 0;
        for (&i, s) in open.iter().zip(shares) {
            let free = capacities[i] - quotas[i];
            quotas[i] += s.min(free);
            overflow += s.saturating_sub(free);
        }
        left = overflow;
        open.retain(|&i| quotas[i] < capacities[i]);
    }
    Ok(quotas)
}

fn apportion(shares: &[f64], total: usize, rng: &mut Rng) -> Vec<usize> {
    let exact: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let remaining = total.saturating_sub(assigned);
    if remaining == 0 {
        return counts;
    }
    let fracs: Vec<f64> = exact
        .iter()
        .zip(&counts)
        .map(|(e, &c)| (e - c as f64).max(0.0))
        .collect();
    let mut hit = vec![false; fracs.len()];
    let u = rng.uniform();
    let mut cum = 0.0;
    let mut next = u;
    let mut placed = 0;
    for (i, f) in fracs.iter().enumerate() {
        cum += f;
        if placed < remaining && next < cum {
            hit[i] = true;
            placed += 1;
            next += 1.0;
        }
    }
    // rounding can leave the last point just past the cumulative total
    while placed < remaining {
        let pick = (0..fracs.len())
            .filter(|&i| !hit[i])
            .max_by(|&a, &b| fracs[a].total_cmp(&fracs[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        hit[pick] = true;
        placed += 1;
    }
    for (c, h) in counts.iter_mut().zip(hit) {
        *c += usize::from(h);
    }
    counts
}

/// Draws `k` distinct members with probability proportional to `weights`,
/// one at a time without replacement.
fn draw_weighted(members: &[usize], weights: &[f64], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut pool: Vec<(usize, f64)> = members.iter().copied().zip(weights.iter().copied()).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = pool.iter().map(|p| p.1).sum();
        let pos = if total > 0.0 && total.is_finite() {
            let target = rng.uniform() * total;
            let mut cum = 0.0;
            let mut pick = pool.len() - 1;
            for (j, p) in pool.iter().enumerate() {
                cum += p.1;
                if target < cum {
                    pick = j;
                    break;
                }
            }
            pick
        } else {
            rng.below(pool.len())
        };
        out.push(pool.swap_remove(pos).0);
    }
    out
}

/// Builds a mini-batch whose class counts follow `action`; samples within a
/// class are drawn from the ledger's weights, or uniformly without one.
pub fn weighted_sample(
    data: &LabeledDataset,
    class_members: &[Vec<usize>],
    action: &[f64],
    ledger: Option<&WeightLedger>,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<MiniBatch> {
    if batch_size == 0 {
        return Err(Error::Empty("mini-batch"));
    }
    let capacities: Vec<usize> = class_members.iter().map(Vec::len).collect();
    let quotas = class_quotas(action, batch_size, &capacities, rng)?;
    let mut indices = Vec::with_capacity(batch_size);
    for (members, &q) in class_members.iter().zip(&quotas) {
        if q == 0 {
            continue;
        }
        match ledger {
            Some(l) => indices.extend(draw_weighted(members, &l.class_distribution(members), q, rng)),
            None => indices.extend(rng.sample_indices(members.len(), q).into_iter().map(|j| members[j])),
        }
    }
    MiniBatch::new(indices, data)
}
