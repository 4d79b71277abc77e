use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::config::RunConfig;
use crate::demand::{sample_row, stationary_distribution, AppChain};
use crate::error::Result;
use crate::market::next_price;
use crate::netsim::{
    max_throughput, mobility_step, uniform_in_disc, LinkQuality, MobilityState, NetworkModel, Point,
};
use crate::types::AppId;

/// Independent ChaCha stream for one (purpose, index) pair under `seed`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | (index & 0xffff_ffff));
    rng
}

pub(crate) mod purpose {
    pub const PRICES: u64 = 1;
    pub const MOBILITY: u64 = 2;
    pub const BACKGROUND: u64 = 3;
    pub const APPS: u64 = 0x100;
    pub const POLICY: u64 = 0x10000;
}

/// Radio conditions of one DUT towards one network at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub serving_bs: usize,
    pub sinr: f64,
    /// Throughput before sharing with anyone else.
    pub peak_mbps: f64,
}

/// Everything random about one iteration, drawn once and replayed for every
/// policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub seed: u64,
    pub iteration: usize,
    /// `[step][provider]` prices of the two-point process.
    pub prices: Vec<Vec<f64>>,
    /// `[step][provider]` uniforms driving dual-speed price transitions.
    pub price_uniforms: Vec<Vec<f64>>,
    /// Dual-speed starting states, one per provider.
    pub initial_price_states: Vec<usize>,
    /// `[dut][step]` launched app.
    pub apps: Vec<Vec<AppId>>,
    /// `[dut]` walking direction.
    pub angles: Vec<f64>,
    /// `[dut][step]` position.
    pub positions: Vec<Vec<Point>>,
    /// `[network]` background UE positions.
    pub background: Vec<Vec<Point>>,
    /// `[network][bs]` background UEs attached.
    pub attached: Vec<Vec<u32>>,
    /// `[step][dut][network]`.
    pub links: Vec<Vec<Vec<LinkSample>>>,
}

/// Center and radius of the disc covering a network's cells.
fn coverage_disc(net: &NetworkModel) -> (Point, f64) {
    let n = net.bs_positions.len() as f64;
    let cx = net.bs_positions.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = net.bs_positions.iter().map(|p| p.y).sum::<f64>() / n;
    let center = Point::new(cx, cy);
    let reach = net
        .bs_positions
        .iter()
        .map(|p| p.distance(&center))
        .fold(0.0, f64::max);
    (center, reach + net.cell_radius_m)
}

impl ScenarioTrace {
    /// Draws iteration `iteration`'s trace. `networks` carries the static
    /// geometry; background attachment is computed here.
    pub fn generate(
        cfg: &RunConfig,
        networks: &[NetworkModel],
        seed: u64,
        iteration: usize,
    ) -> Result<Self> {
        let it = iteration as u64;
        let steps = cfg.general.steps;
        let duts = cfg.general.duts;
        let k = networks.len();

        let mut price_rng = stream(seed, purpose::PRICES, it);
        let ranges = cfg.price_ranges();
        let prices: Vec<Vec<f64>> = (0..steps)
            .map(|_| {
                ranges
                    .iter()
                    .map(|r| next_price(r, &mut price_rng))
                    .collect()
            })
            .collect();
        let price_uniforms: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..k).map(|_| price_rng.random()).collect())
            .collect();
        let initial_price_states = match &cfg.dual_speed {
            Some(ds) => {
                let pi = stationary_distribution(&ds.p_pop);
                (0..k)
                    .map(|_| sample_row(&pi, price_rng.random()))
                    .collect()
            }
            None => vec![0; k],
        };

        let apps = (0..duts)
            .map(|d| {
                let mut rng = stream(seed, purpose::APPS + d as u64, it);
                let demand = cfg.demand_for(d);
                let mut chain = AppChain::from_stationary(
                    demand.profiles(),
                    demand.transition.clone(),
                    &mut rng,
                )?;
                let mut seq = Vec::with_capacity(steps);
                seq.push(chain.current());
                for _ in 1..steps {
                    seq.push(chain.next_app(&mut rng));
                }
                Ok(seq)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut mob_rng = stream(seed, purpose::MOBILITY, it);
        let walk = cfg.walk_length_m();
        let angles: Vec<f64> = (0..duts)
            .map(|_| mob_rng.random_range(0.0..2.0 * PI))
            .collect();
        let positions: Vec<Vec<Point>> = angles
            .iter()
            .map(|&angle| {
                let mut state = MobilityState::new(Point::ORIGIN, angle, walk);
                let mut path = Vec::with_capacity(steps);
                for _ in 0..steps {
                    path.push(state.position);
                    state = mobility_step(state);
                }
                path
            })
            .collect();

        let mut bg_rng = stream(seed, purpose::BACKGROUND, it);
        let pathloss = &cfg.radio.pathloss;
        let mut attached = Vec::with_capacity(k);
        let mut background = Vec::with_capacity(k);
        for (net, net_cfg) in networks.iter().zip(&cfg.networks) {
            let (center, reach) = coverage_disc(net);
            let radius = cfg.general.background_radius_m.unwrap_or(reach);
            let ues: Vec<Point> = (0..net_cfg.background_ues)
                .map(|_| uniform_in_disc(center, radius, &mut bg_rng))
                .collect();
            let mut with_bg = net.clone();
            with_bg.attach_background(&ues, pathloss);
            attached.push(with_bg.attached);
            background.push(ues);
        }

        let links = (0..steps)
            .map(|t| {
                positions
                    .iter()
                    .map(|path| {
                        networks
                            .iter()
                            .map(|net| {
                                let noise = cfg.radio.noise_dbm(net.bandwidth_hz);
                                let LinkQuality { serving_bs, sinr } =
                                    net.link(&path[t], noise, pathloss);
                                LinkSample {
                                    serving_bs,
                                    sinr,
                                    peak_mbps: max_throughput(
                                        sinr,
                                        net.bandwidth_hz,
                                        1,
                                        cfg.radio.efficiency_cap,
                                    ),
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            seed,
            iteration,
            prices,
            price_uniforms,
            initial_price_states,
            apps,
            angles,
            positions,
            background,
            attached,
            links,
        })
    }
}
