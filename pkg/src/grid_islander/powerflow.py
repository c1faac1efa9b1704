"""AC (Newton-Raphson) and DC power flow on a network or island subset.

Dense numpy implementation sized for study networks (a few hundred
buses). Branch model is the standard pi section with off-nominal tap on
the from side. Buses holding a voltage setpoint are PV, the rest PQ;
reactive limits are not enforced. The slack bus defaults to the
generator-set bus with the largest scheduled output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NoGenerator, NotConverged, NotFound, SingularSystem
from .network import Branch, PowerNetwork

logger = logging.getLogger("grid_islander.powerflow")

AC_TOLERANCE = 1e-8
AC_MAX_ITERATIONS = 20


@dataclass(frozen=True)
class PowerFlowSolution:
    """Bus voltages and branch flows of one solved case.

    ``branch_ends`` lists the (from, to) pair of every solved branch, in
    the same order as the flow arrays. Flows are in MW / MVAr, positive
    into the branch at each end, so ``p_from + p_to`` is the branch's
    active loss.
    """

    method: str                     # "ac" or "dc"
    node_ids: tuple[int, ...]
    vm: np.ndarray                  # per-unit magnitudes
    va: np.ndarray                  # radians
    branch_ends: tuple[tuple[int, int], ...]
    p_from: np.ndarray
    p_to: np.ndarray
    q_from: np.ndarray
    q_to: np.ndarray
    converged: bool
    iterations: int
    mismatch: float
    mismatch_history: tuple[float, ...]
    slack: int

    @property
    def p_loss(self) -> np.ndarray:
        return self.p_from + self.p_to

    def voltage(self, node: int) -> tuple[float, float]:
        try:
            k = self.node_ids.index(node)
        except ValueError:
            raise NotFound(f"node {node} not in solution") from None
        return float(self.vm[k]), float(self.va[k])


def _select_nodes(network: PowerNetwork,
                  nodes: Iterable[int] | None) -> tuple[int, ...]:
    if nodes is None:
        return network.node_ids()
    chosen = tuple(sorted(set(int(n) for n in nodes)))
    for n in chosen:
        network.bus(n)
    if not chosen:
        raise ValueError("empty node set")
    return chosen


def _island_branches(network: PowerNetwork,
                     nodes: Sequence[int]) -> list[Branch]:
    inside = set(nodes)
    return [br for br in network.branches
            if br.status and br.from_bus in inside and br.to_bus in inside]


def default_slack(network: PowerNetwork,
                  nodes: Iterable[int] | None = None) -> int:
    """Generator-set bus with the largest scheduled output (ties: lowest
    id) among ``nodes``, or over the whole network."""
    chosen = _select_nodes(network, nodes)
    gens = [n for n in chosen if n in network.generator_set]
    if not gens:
        raise NoGenerator("no generator bus available for slack")
    return min(gens, key=lambda n: (-network.bus(n).p_gen_scheduled, n))


def _check_connected_subset(network: PowerNetwork,
                            nodes: Sequence[int]) -> None:
    if not network.subgraph_connected(nodes):
        raise SingularSystem("node set is not connected; flow equations "
                             "are singular")


def dc_power_flow(network: PowerNetwork,
                  nodes: Iterable[int] | None = None,
                  slack: int | None = None) -> PowerFlowSolution:
    """Lossless linear power flow: B theta = P with flat voltages.

    Branch susceptance is 1/(x * tap); the slack angle is zero.
    """
    chosen = _select_nodes(network, nodes)
    _check_connected_subset(network, chosen)
    if slack is None:
        slack = default_slack(network, chosen)
    elif slack not in chosen:
        raise NotFound(f"slack bus {slack} not in node set")
    index = {n: k for k, n in enumerate(chosen)}
    n = len(chosen)
    branches = _island_branches(network, chosen)

    b_matrix = np.zeros((n, n))
    for br in branches:
        f, t = index[br.from_bus], index[br.to_bus]
        b = 1.0 / (br.reactance * br.tap_ratio)
        b_matrix[f, f] += b
        b_matrix[t, t] += b
        b_matrix[f, t] -= b
        b_matrix[t, f] -= b

    injections = np.array([
        (network.bus(node).p_gen_scheduled - network.bus(node).p_demand)
        / network.base_mva for node in chosen])
    keep = [k for k in range(n) if k != index[slack]]
    theta = np.zeros(n)
    if keep:
        try:
            theta[keep] = np.linalg.solve(b_matrix[np.ix_(keep, keep)],
                                          injections[keep])
        except np.linalg.LinAlgError:
            raise SingularSystem("susceptance matrix is singular") from None

    p_from = np.empty(len(branches))
    for k, br in enumerate(branches):
        b = 1.0 / (br.reactance * br.tap_ratio)
        p_from[k] = b * (theta[index[br.from_bus]] - theta[index[br.to_bus]])
    p_from *= network.base_mva
    zeros = np.zeros(len(branches))
    return PowerFlowSolution(
        method="dc", node_ids=chosen, vm=np.ones(n), va=theta,
        branch_ends=tuple((br.from_bus, br.to_bus) for br in branches),
        p_from=p_from, p_to=-p_from, q_from=zeros, q_to=zeros.copy(),
        converged=True, iterations=0, mismatch=0.0,
        mismatch_history=(), slack=slack)


def build_ybus(network: PowerNetwork, nodes: Sequence[int]
               ) -> tuple[np.ndarray, list[Branch]]:
    """Bus admittance matrix over ``nodes`` plus the branches included."""
    index = {n: k for k, n in enumerate(nodes)}
    branches = _island_branches(network, nodes)
    ybus = np.zeros((len(nodes), len(nodes)), dtype=complex)
    for br in branches:
        f, t = index[br.from_bus], index[br.to_bus]
        ys = 1.0 / complex(br.resistance, br.reactance)
        shunt = 0.5j * br.charging
        tap = br.tap_ratio
        ybus[f, f] += (ys + shunt) / (tap * tap)
        ybus[t, t] += ys + shunt
        ybus[f, t] += -ys / tap
        ybus[t, f] += -ys / tap
    return ybus, branches


def ac_power_flow(network: PowerNetwork,
                  nodes: Iterable[int] | None = None,
                  slack: int | None = None,
                  tol: float = AC_TOLERANCE,
                  max_iterations: int = AC_MAX_ITERATIONS
                  ) -> PowerFlowSolution:
    """Full Newton-Raphson power flow in polar form, flat start.

    Converges when the largest active or reactive mismatch falls below
    ``tol`` (per unit). Raises NotConverged with the iteration count and
    final mismatch if the limit is hit first.
    """
    chosen = _select_nodes(network, nodes)
    _check_connected_subset(network, chosen)
    if slack is None:
        slack = default_slack(network, chosen)
    elif slack not in chosen:
        raise NotFound(f"slack bus {slack} not in node set")
    index = {n: k for k, n in enumerate(chosen)}
    n = len(chosen)
    ybus, branches = build_ybus(network, chosen)

    base = network.base_mva
    p_spec = np.zeros(n)
    q_spec = np.zeros(n)
    vm = np.ones(n)
    va = np.zeros(n)
    is_pv = np.zeros(n, dtype=bool)
    for node in chosen:
        k = index[node]
        bus = network.bus(node)
        p_spec[k] = (bus.p_gen_scheduled - bus.p_demand) / base
        q_spec[k] = -bus.q_demand / base
        if bus.voltage_setpoint is not None:
            is_pv[k] = True
            vm[k] = bus.voltage_setpoint
    slack_k = index[slack]
    is_pv[slack_k] = False
    if network.bus(slack).voltage_setpoint is not None:
        vm[slack_k] = network.bus(slack).voltage_setpoint

    pv = np.flatnonzero(is_pv)
    pq = np.flatnonzero(~is_pv & (np.arange(n) != slack_k))
    pvpq = np.concatenate([pv, pq])

    history: list[float] = []
    iterations = 0
    converged = False
    mismatch = np.inf
    while True:
        voltage = vm * np.exp(1j * va)
        s_calc = voltage * np.conj(ybus @ voltage)
        dp = p_spec - s_calc.real
        dq = q_spec - s_calc.imag
        f = np.concatenate([dp[pvpq], dq[pq]])
        mismatch = float(np.max(np.abs(f))) if f.size else 0.0
        history.append(mismatch)
        if mismatch < tol:
            converged = True
            break
        if iterations >= max_iterations:
            break
        iterations += 1

        current = ybus @ voltage
        diag_v = np.diag(voltage)
        diag_i = np.diag(current)
        diag_e = np.diag(voltage / np.abs(voltage))
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        ds_dvm = diag_v @ np.conj(ybus @ diag_e) + np.conj(diag_i) @ diag_e

        j11 = ds_dva[np.ix_(pvpq, pvpq)].real
        j12 = ds_dvm[np.ix_(pvpq, pq)].real
        j21 = ds_dva[np.ix_(pq, pvpq)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            raise SingularSystem("power-flow Jacobian is singular") from None
        va[pvpq] += dx[:pvpq.size]
        vm[pq] += dx[pvpq.size:]

    if not converged:
        raise NotConverged(iterations, mismatch)

    voltage = vm * np.exp(1j * va)
    n_br = len(branches)
    p_from = np.empty(n_br)
    p_to = np.empty(n_br)
    q_from = np.empty(n_br)
    q_to = np.empty(n_br)
    for k, br in enumerate(branches):
        f_idx, t_idx = index[br.from_bus], index[br.to_bus]
        ys = 1.0 / complex(br.resistance, br.reactance)
        shunt = 0.5j * br.charging
        tap = br.tap_ratio
        vf, vt = voltage[f_idx], voltage[t_idx]
        i_from = (ys + shunt) / (tap * tap) * vf - ys / tap * vt
        i_to = (ys + shunt) * vt - ys / tap * vf
        s_from = vf * np.conj(i_from) * base
        s_to = vt * np.conj(i_to) * base
        p_from[k], q_from[k] = s_from.real, s_from.imag
        p_to[k], q_to[k] = s_to.real, s_to.imag

    return PowerFlowSolution(
        method="ac", node_ids=chosen, vm=vm, va=va,
        branch_ends=tuple((br.from_bus, br.to_bus) for br in branches),
        p_from=p_from, p_to=p_to, q_from=q_from, q_to=q_to,
        converged=True, iterations=iterations, mismatch=mismatch,
        mismatch_history=tuple(history), slack=slack)
