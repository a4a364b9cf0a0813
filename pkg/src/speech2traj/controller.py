"""Simulated low-level control loop: one PI controller per finger driving
a first-order actuator toward the commanded trajectory.

The inference cadence produces a stair-shaped reference (it jumps when a
new trajectory arrives and holds until the next one); the closed loop
smooths it. The plant x' = (u - x)/tau is a stand-in for unmodeled
hardware, saturated to [0, 1] like the control signal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

# ki high enough that the slow closed-loop mode (~ki/(1+kp) rad/s) drives
# a constant-reference error below 1e-3 well inside 2 s without overshoot
DEFAULT_KP = 2.0
DEFAULT_KI = 15.0
DEFAULT_TAU_S = 0.05
DEFAULT_DT_S = 0.01


def _clamp(value, lo, hi):
    return lo if value < lo else hi if value > hi else value


@dataclass
class PIController:
    kp: float = DEFAULT_KP
    ki: float = DEFAULT_KI
    dt_s: float = DEFAULT_DT_S
    i_max: float = 1.0
    u_min: float = 0.0
    u_max: float = 1.0
    integral: float = 0.0

    def step(self, reference: float, measured: float) -> float:
        error = reference - measured
        self.integral = _clamp(self.integral + self.ki * error * self.dt_s,
                               -self.i_max, self.i_max)
        return _clamp(self.kp * error + self.integral, self.u_min, self.u_max)


def pi_step(ctrl: PIController, reference: float, measured: float) -> float:
    return ctrl.step(reference, measured)


@dataclass
class FingerPlant:
    position: float = 0.0
    time_constant_s: float = DEFAULT_TAU_S
    dt_s: float = DEFAULT_DT_S

    def __post_init__(self):
        if self.dt_s >= self.time_constant_s:
            raise ValueError("dt must stay below the plant time constant")

    def step(self, u: float) -> float:
        self.position = _clamp(
            self.position + self.dt_s * (u - self.position) / self.time_constant_s,
            0.0, 1.0)
        return self.position


def plant_step(plant: FingerPlant, u: float) -> float:
    return plant.step(u)


def simulate(events, duration_s: float, kp: float = DEFAULT_KP, ki: float = DEFAULT_KI,
             tau_s: float = DEFAULT_TAU_S, dt_s: float = DEFAULT_DT_S):
    """Run the five independent loops against a zero-order-hold reference.

    `events` is a time-ordered iterable of (t_seconds, 5-vector); before
    the first event the reference is the zero vector. Returns
    (t (T,), reference (T,5), position (T,5)).
    """
    events = list(events)
    steps = int(round(duration_s / dt_s))
    controllers = [PIController(kp=kp, ki=ki, dt_s=dt_s) for _ in range(5)]
    plants = [FingerPlant(time_constant_s=tau_s, dt_s=dt_s) for _ in range(5)]

    t = np.arange(steps) * dt_s
    reference = np.zeros((steps, 5))
    position = np.zeros((steps, 5))
    current = np.zeros(5)
    next_event = 0
    for i in range(steps):
        while next_event < len(events) and events[next_event][0] <= t[i]:
            current = np.asarray(events[next_event][1], dtype=np.float64)
            next_event += 1
        reference[i] = current
        for f in range(5):
            u = controllers[f].step(current[f], plants[f].position)
            position[i, f] = plants[f].step(u)
    return t, reference, position


def write_simulation_csv(path, t, reference, position) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s"] + [f"ref_{i+1}" for i in range(5)]
                        + [f"pos_{i+1}" for i in range(5)])
        for i in range(len(t)):
            writer.writerow([f"{t[i]:.4f}"] + [f"{v:.6f}" for v in reference[i]]
                            + [f"{v:.6f}" for v in position[i]])
