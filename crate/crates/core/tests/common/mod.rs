//! Reference implementations used to cross-check the library. They share no
//! code with it beyond reading raw parameter fields.
#![allow(dead_code)]

use orbitsplit::agent::QNetwork;
use orbitsplit::model::{ModelParams, NodeId};
use rand::Rng;

// ---------------------------------------------------------------- model ----

/// Node order GAT, SAT, HAP.
const G: usize = 0;
const S: usize = 1;
const H: usize = 2;

/// (cu, du) per placement in enumeration order.
const PLACEMENTS: [(usize, usize); 5] = [(G, G), (G, S), (S, S), (G, H), (H, H)];

pub struct Raw {
    idle: [f64; 3],
    epo: [f64; 3],
    comp_max: [f64; 3],
    /// SAT-GAT and HAP-GAT: (distance m, capacity Mbps, tx power W).
    link: [(f64, f64, f64); 3],
    /// PHY, low MAC, high MAC, low RLC, high RLC, PDCP.
    fn_load: [f64; 6],
    latency_req: [f64; 7],
    backhaul: bool,
}

impl Raw {
    pub fn from(p: &ModelParams) -> Raw {
        let node = |n: NodeId| p.nodes.get(n);
        let link_to_gat = |n: NodeId| {
            let l = p.links.iter().find(|l| l.endpoints == (n, NodeId::Gat) || l.endpoints == (NodeId::Gat, n)).unwrap();
            (l.distance_m, l.capacity_mbps, l.tx_power_w)
        };
        let l = &p.loads;
        Raw {
            idle: [node(NodeId::Gat).idle_power_w, node(NodeId::Sat).idle_power_w, node(NodeId::Hap).idle_power_w],
            epo: [node(NodeId::Gat).epo_j_per_to, node(NodeId::Sat).epo_j_per_to, node(NodeId::Hap).epo_j_per_to],
            comp_max: [node(NodeId::Gat).comp_max_gops, node(NodeId::Sat).comp_max_gops, node(NodeId::Hap).comp_max_gops],
            link: [(0.0, 0.0, 0.0), link_to_gat(NodeId::Sat), link_to_gat(NodeId::Hap)],
            fn_load: [
                l.comp_phy,
                l.comp_mac * l.mac_low_fraction,
                l.comp_mac * (1.0 - l.mac_low_fraction),
                l.comp_rlc * l.rlc_low_fraction,
                l.comp_rlc * (1.0 - l.rlc_low_fraction),
                l.comp_pdcp,
            ],
            latency_req: p.latency_req_ms,
            backhaul: p.backhaul_mode,
        }
    }
}

pub struct Eval {
    pub power: f64,
    pub feasible: bool,
}

fn tra(split: usize, lambda: f64) -> f64 {
    match split {
        0..=3 => lambda,
        4 | 5 => 1.02 * lambda + 1.5,
        _ => 2500.0,
    }
}

/// Power and feasibility of placement `pi` with split `o`.
pub fn evaluate(r: &Raw, pi: usize, o: usize, lambda: f64) -> Eval {
    let (cu, du) = PLACEMENTS[pi];
    let du_load: f64 = r.fn_load[..6 - o].iter().sum();
    let cu_load: f64 = r.fn_load[6 - o..].iter().sum();
    let mono = cu == du;
    let mut power;
    let mut latency_ok = true;
    let mut traffic_ok = true;
    if mono {
        power = r.idle[cu] + r.epo[cu] * (cu_load + du_load) / 1000.0;
        if r.backhaul && cu != G {
            let (_, cap, p) = r.link[cu];
            power += p * lambda / cap;
            traffic_ok = lambda <= cap;
        }
    } else {
        let (dist, cap, p) = r.link[du];
        power = r.idle[cu] + r.idle[du] + (r.epo[cu] * cu_load + r.epo[du] * du_load) / 1000.0;
        let t = tra(o, lambda);
        power += p * t / cap;
        traffic_ok = t <= cap;
        latency_ok = dist / 2.998e8 * 1000.0 <= r.latency_req[o];
    }
    let compute_ok = cu_load + du_load <= r.comp_max[cu] + r.comp_max[du];
    Eval { power, feasible: latency_ok && traffic_ok && compute_ok }
}

/// Cheapest feasible (placement index, split, power), split-major order,
/// near-ties to the earlier candidate.
pub fn enumerate_best(r: &Raw, lambda: f64) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for o in 0..7 {
        for pi in 0..5 {
            let e = evaluate(r, pi, o, lambda);
            if !e.feasible {
                continue;
            }
            match best {
                Some((_, _, b)) if e.power >= b - 1e-12 * b.abs().max(1.0) => {}
                _ => best = Some((pi, o, e.power)),
            }
        }
    }
    best
}

/// Every power-related constant multiplied by a factor in `[0.5, 2]`, link
/// capacities and latency bounds jittered so feasibility varies.
pub fn perturbed_params<R: Rng>(rng: &mut R) -> ModelParams {
    let mut p = ModelParams::default();
    let f = |rng: &mut R| rng.gen_range(0.5..2.0);
    for n in NodeId::ALL {
        let np = p.nodes.get_mut(n);
        np.idle_power_w *= f(rng);
        np.epo_j_per_to *= f(rng);
        np.comp_max_gops *= f(rng);
    }
    for l in &mut p.links {
        l.distance_m *= f(rng);
        l.capacity_mbps *= rng.gen_range(0.3..30.0);
        l.tx_power_w *= f(rng);
    }
    p.loads.comp_phy *= f(rng);
    p.loads.comp_mac *= f(rng);
    p.loads.comp_rlc *= f(rng);
    p.loads.comp_pdcp *= f(rng);
    p.loads.mac_low_fraction = rng.gen_range(0.05..0.95);
    p.loads.rlc_low_fraction = rng.gen_range(0.05..0.95);
    for v in &mut p.latency_req_ms {
        *v *= rng.gen_range(0.2..30.0);
    }
    p.backhaul_mode = rng.gen_bool(0.5);
    p
}

// -------------------------------------------------------------- network ----

fn affine(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut s = *bi;
            for (a, v) in row.iter().zip(x) {
                s += a * v;
            }
            s
        })
        .collect()
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| if x > 0.0 { x } else { 0.0 }).collect()
}

type Layer = (Vec<Vec<f64>>, Vec<f64>);

/// Weights copied out into nested vectors.
pub fn plain_layers(net: &QNetwork) -> Vec<Layer> {
    net.layers()
        .iter()
        .map(|l| {
            let w = (0..l.weight.nrows()).map(|i| (0..l.weight.ncols()).map(|j| l.weight[[i, j]]).collect()).collect();
            (w, l.bias.iter().copied().collect())
        })
        .collect()
}

/// Straight-line forward pass: two dense layers, two residual blocks, head.
pub fn plain_forward(layers: &[Layer], x: &[f64]) -> Vec<f64> {
    let h1 = relu(affine(&layers[0].0, &layers[0].1, x));
    let h2 = relu(affine(&layers[1].0, &layers[1].1, &h1));
    let a1 = relu(affine(&layers[2].0, &layers[2].1, &h2));
    let b1 = affine(&layers[3].0, &layers[3].1, &a1);
    let r1 = relu(h2.iter().zip(&b1).map(|(s, t)| s + t).collect());
    let a2 = relu(affine(&layers[4].0, &layers[4].1, &r1));
    let b2 = affine(&layers[5].0, &layers[5].1, &a2);
    let r2 = relu(r1.iter().zip(&b2).map(|(s, t)| s + t).collect());
    affine(&layers[6].0, &layers[6].1, &r2)
}

/// Hidden pre-activations of the straight-line forward pass, for detecting
/// ReLU kinks.
pub fn activation_pattern(layers: &[Layer], x: &[f64]) -> Vec<bool> {
    let mut pattern = Vec::new();
    let mut push = |v: &[f64]| pattern.extend(v.iter().map(|&z| z > 0.0));
    let z1 = affine(&layers[0].0, &layers[0].1, x);
    push(&z1);
    let h1 = relu(z1);
    let z2 = affine(&layers[1].0, &layers[1].1, &h1);
    push(&z2);
    let h2 = relu(z2);
    let za = affine(&layers[2].0, &layers[2].1, &h2);
    push(&za);
    let b1 = affine(&layers[3].0, &layers[3].1, &relu(za));
    let z3: Vec<f64> = h2.iter().zip(&b1).map(|(s, t)| s + t).collect();
    push(&z3);
    let r1 = relu(z3);
    let zb = affine(&layers[4].0, &layers[4].1, &r1);
    push(&zb);
    let b2 = affine(&layers[5].0, &layers[5].1, &relu(zb));
    let z4: Vec<f64> = r1.iter().zip(&b2).map(|(s, t)| s + t).collect();
    push(&z4);
    pattern
}

/// Mean squared error on the taken actions.
pub fn plain_loss(layers: &[Layer], states: &[Vec<f64>], actions: &[usize], targets: &[f64]) -> f64 {
    let n = states.len() as f64;
    states
        .iter()
        .zip(actions)
        .zip(targets)
        .map(|((s, &a), &t)| (plain_forward(layers, s)[a] - t).powi(2))
        .sum::<f64>()
        / n
}

/// Max relative error between analytic and central-difference gradients over
/// `per_tensor` sampled coordinates of every weight and bias tensor.
pub fn gradient_check<R: Rng>(
    net: &QNetwork,
    states: &[Vec<f64>],
    actions: &[usize],
    targets: &[f64],
    per_tensor: usize,
    rng: &mut R,
) -> (f64, usize) {
    const H: f64 = 1e-5;
    const FLOOR: f64 = 1e-6;
    let refs: Vec<&[f64]> = states.iter().map(|s| s.as_slice()).collect();
    let (_, grad) = orbitsplit::agent::loss_and_gradient(net, &refs, actions, targets).unwrap();
    let grad_layers = plain_layers(&grad);
    let base = plain_layers(net);
    let base_patterns: Vec<Vec<bool>> = states.iter().map(|s| activation_pattern(&base, s)).collect();
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for li in 0..base.len() {
        for is_bias in [false, true] {
            let mut done = 0;
            let mut attempts = 0;
            while done < per_tensor && attempts < per_tensor * 20 {
                attempts += 1;
                let rows = base[li].0.len();
                let cols = base[li].0[0].len();
                let (i, j) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
                let mut plus = base.clone();
                let mut minus = base.clone();
                let analytic;
                if is_bias {
                    plus[li].1[i] += H;
                    minus[li].1[i] -= H;
                    analytic = grad_layers[li].1[i];
                } else {
                    plus[li].0[i][j] += H;
                    minus[li].0[i][j] -= H;
                    analytic = grad_layers[li].0[i][j];
                }
                let kink = states.iter().zip(&base_patterns).any(|(s, p)| {
                    activation_pattern(&plus, s) != *p || activation_pattern(&minus, s) != *p
                });
                if kink {
                    continue;
                }
                let numeric = (plain_loss(&plus, states, actions, targets) - plain_loss(&minus, states, actions, targets)) / (2.0 * H);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
                worst = worst.max(rel);
                done += 1;
                checked += 1;
            }
        }
    }
    (worst, checked)
}
