//! Teleoperation controller: filters the master stream once per tick and
//! fans the resulting targets out to every registered follower.

use nalgebra::{DVector, UnitQuaternion, Vector3};
use nuexo_core::control::{
    joint_impedance_torque, quat_error, rotation_exp, rotation_vector, shoulder_impedance_torque, BindingForce,
    ControlSettings, ImpedanceGains, JointGains, PoseError, SubsystemGains, TremorFilterState,
};
use nuexo_core::follower_sim::{joints, FollowerModel};

use crate::schema::{FollowerStateMsg, MasterState, TorqueCmd, FINGERS};
use crate::TeleopError;

/// A follower state older than this many ticks is stale.
pub const STALENESS_TICKS: u64 = 5;

/// Length of the filtered master vector: shoulder and wrist rotation
/// vectors, elbow, fingers.
const FILTERED_LEN: usize = 3 + 3 + 1 + FINGERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StalenessEvent {
    pub follower_id: u16,
    pub tick: u64,
    /// Ticks since the last state update; `None` if none was ever received.
    pub age: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickOutput {
    pub commands: Vec<TorqueCmd>,
    pub events: Vec<StalenessEvent>,
}

#[derive(Debug, Clone)]
struct FollowerSlot {
    id: u16,
    model: FollowerModel<f64>,
    latest: Option<(FollowerStateMsg, u64)>,
    stale: bool,
}

/// Stateful controller: tremor filter, follower registry and tick counter.
#[derive(Debug, Clone)]
pub struct Controller {
    settings: ControlSettings,
    filter: TremorFilterState<f64>,
    followers: Vec<FollowerSlot>,
    tick: u64,
    staleness_ticks: u64,
}

impl Controller {
    pub fn new(settings: ControlSettings, followers: Vec<(u16, FollowerModel<f64>)>) -> Result<Self, TeleopError> {
        if followers.is_empty() {
            return Err(TeleopError::NoFollowers);
        }
        let mut ids: Vec<u16> = followers.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(TeleopError::Config("duplicate follower id".into()));
        }
        let filter = TremorFilterState::new(settings.deadband, settings.hysteresis_exit)?;
        Ok(Self {
            settings,
            filter,
            followers: followers
                .into_iter()
                .map(|(id, model)| FollowerSlot {
                    id,
                    model,
                    latest: None,
                    stale: false,
                })
                .collect(),
            tick: 0,
            staleness_ticks: STALENESS_TICKS,
        })
    }

    pub fn settings(&self) -> &ControlSettings {
        &self.settings
    }

    pub fn follower_ids(&self) -> Vec<u16> {
        self.followers.iter().map(|f| f.id).collect()
    }

    /// Index of the next tick.
    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    /// Records a follower state as received before the next tick. Unknown
    /// ids are ignored and reported as `false`.
    pub fn update_follower(&mut self, id: u16, state: FollowerStateMsg) -> bool {
        let tick = self.tick;
        match self.followers.iter_mut().find(|f| f.id == id) {
            Some(slot) => {
                slot.latest = Some((state, tick));
                slot.stale = false;
                true
            }
            None => false,
        }
    }

    /// Advances the tick counter without commanding anyone (no usable master).
    pub fn skip_tick(&mut self) {
        self.tick += 1;
    }

    /// Runs one control tick against `master`.
    pub fn tick(&mut self, master: &MasterState, timestamp_us: u64) -> Result<TickOutput, TeleopError> {
        let target = filter_master(&mut self.filter, master);
        let mut out = TickOutput::default();
        let tick = self.tick;
        for slot in &mut self.followers {
            let age = slot.latest.as_ref().map(|(_, at)| tick - at);
            let fresh = matches!(age, Some(a) if a <= self.staleness_ticks);
            if !fresh {
                if !slot.stale {
                    slot.stale = true;
                    out.events.push(StalenessEvent {
                        follower_id: slot.id,
                        tick,
                        age,
                    });
                }
                continue;
            }
            let (state, _) = slot.latest.as_ref().expect("fresh implies a state");
            out.commands.push(TorqueCmd {
                follower_id: slot.id,
                timestamp_us,
                torque: follower_torque(&target, state, &slot.model, &self.settings)?,
            });
        }
        self.tick += 1;
        Ok(out)
    }
}

/// Applies the tremor filter to the position part of the master state.
/// Unchanged channels keep their exact input values.
pub fn filter_master(filter: &mut TremorFilterState<f64>, master: &MasterState) -> MasterState {
    let rs = rotation_vector(&master.shoulder);
    let rw = rotation_vector(&master.wrist);
    let mut input = Vec::with_capacity(FILTERED_LEN);
    input.extend_from_slice(rs.as_slice());
    input.extend_from_slice(rw.as_slice());
    input.push(master.elbow);
    input.extend_from_slice(&master.fingers);
    let input = DVector::from_vec(input);
    let y = filter.apply(&input);
    let rotation = |range: std::ops::Range<usize>, original: &UnitQuaternion<f64>| {
        if range.clone().all(|i| y[i].to_bits() == input[i].to_bits()) {
            *original
        } else {
            rotation_exp(&Vector3::new(y[range.start], y[range.start + 1], y[range.start + 2]))
        }
    };
    let mut out = master.clone();
    out.shoulder = rotation(0..3, &master.shoulder);
    out.wrist = rotation(3..6, &master.wrist);
    out.elbow = y[6];
    for (k, f) in out.fingers.iter_mut().enumerate() {
        *f = y[7 + k];
    }
    out
}

fn impedance(g: &SubsystemGains) -> Result<ImpedanceGains<f64>, TeleopError> {
    Ok(ImpedanceGains::uniform(3, g.k_p, g.k_d, g.lambda)?)
}

fn joint_gains(g: &SubsystemGains) -> JointGains<f64> {
    JointGains {
        k_p: g.k_p,
        k_d: g.k_d,
        lambda: g.lambda,
    }
}

/// Spherical joint group (shoulder or wrist): pose error in the follower's
/// body frame, mapped to the three joints through the body Jacobian.
fn group_torque(
    pose_m: &UnitQuaternion<f64>,
    rate_m: &Vector3<f64>,
    pose_s: &UnitQuaternion<f64>,
    jacobian: &nalgebra::DMatrix<f64>,
    qd_s: &[f64],
    force: &BindingForce<f64>,
    gains: &SubsystemGains,
) -> Result<[f64; 3], TeleopError> {
    let w_s = jacobian * DVector::from_column_slice(qd_s);
    let err = PoseError {
        q_t: quat_error(pose_s.quaternion(), pose_m.quaternion())?,
        qdot_t: rate_m - Vector3::new(w_s[0], w_s[1], w_s[2]),
    };
    // The binding wrench is measured in the base frame.
    let local = BindingForce {
        torque: pose_s.inverse_transform_vector(&force.torque),
        force: pose_s.inverse_transform_vector(&force.force),
    };
    let limits = DVector::from_element(3, gains.torque_limit);
    let out = shoulder_impedance_torque(&err, jacobian, &local, &impedance(gains)?, &limits)?;
    Ok([out.torque[0], out.torque[1], out.torque[2]])
}

/// Joint torque command for one follower tracking the (filtered) master.
pub fn follower_torque(
    master: &MasterState,
    state: &FollowerStateMsg,
    model: &FollowerModel<f64>,
    settings: &ControlSettings,
) -> Result<[f64; joints::COUNT], TeleopError> {
    let q = &state.angles;
    let qd = &state.velocities;
    let mut tau = [0.0; joints::COUNT];

    let s = joints::SHOULDER;
    let shoulder = group_torque(
        &master.shoulder,
        &master.shoulder_rate,
        &state.shoulder,
        &model.shoulder_jacobian(q),
        &qd[s[0]..=s[2]],
        &master.upper_arm_force,
        &settings.shoulder,
    )?;
    let w = joints::WRIST;
    let wrist = group_torque(
        &master.wrist,
        &master.wrist_rate,
        &state.wrist,
        &model.wrist_jacobian(q),
        &qd[w[0]..=w[2]],
        &master.forearm_force,
        &settings.wrist,
    )?;
    for k in 0..3 {
        tau[s[k]] = shoulder[k];
        tau[w[k]] = wrist[k];
    }

    // The elbow axis is the base x axis; the forearm binding torque about it
    // is injected into the elbow law. Fingers carry no force sensing.
    let e = joints::ELBOW;
    tau[e] = joint_impedance_torque(
        master.elbow,
        q[e],
        master.elbow_rate,
        qd[e],
        master.forearm_force.torque[0],
        &joint_gains(&settings.elbow),
        settings.elbow.torque_limit,
    );
    for (k, &j) in joints::FINGERS.iter().enumerate() {
        tau[j] = joint_impedance_torque(
            master.fingers[k],
            q[j],
            master.finger_rates[k],
            qd[j],
            0.0,
            &joint_gains(&settings.fingers),
            settings.fingers.torque_limit,
        );
    }
    Ok(tau)
}

impl FollowerStateMsg {
    /// State message for a simulated follower measurement.
    pub fn from_measurement(m: &nuexo_core::follower_sim::FollowerMeasurement<f64>) -> Self {
        Self {
            angles: m.config.angles.as_slice().try_into().expect("13 joints"),
            velocities: m.config.velocities.as_slice().try_into().expect("13 joints"),
            shoulder: m.shoulder,
            wrist: m.wrist,
        }
    }
}
