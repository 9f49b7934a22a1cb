"""Register and gate accounting for the fixed-depth cycle circuits.

Widths follow the register list of the truncated GI/GI/1 evaluator: seed,
PRNG call counter, sampled inter-arrival and service values, the waiting-time
state, one history slot per step so the max(., 0) update can be uncomputed,
the violation counter, the output register, ancillas and the freeze flag.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any

from . import config
from .errors import require


@dataclass(frozen=True)
class ResourceReport:
    seed_qubits: int
    counter_qubits: int
    value_qubits_BA: int
    value_qubits_BS: int
    state_qubits_BW: int
    history_qubits: int
    counter_BR: int
    output_BY: int
    ancilla: int
    flag: int
    total_Q: int
    per_step_gates: int
    Tf_gates: int
    TQAE_gates: int
    model: str = "gg1"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def ceil_log2(n: int) -> int:
    """Exact ceil(log2 n) for integers n >= 1."""
    require(n >= 1, "ceil_log2 needs n >= 1", n=n)
    return (n - 1).bit_length()


def bits_for(max_value: int) -> int:
    """Bits needed to hold 0..max_value."""
    return ceil_log2(max_value + 1) if max_value > 0 else 1


def qae_gate_count(Tf_gates: int, eps_Q: float, alpha_Q: float) -> int:
    """ceil((1 / eps_Q) ln(1 / alpha_Q)) oracle calls, each of Tf_gates gates."""
    require(eps_Q > 0, "eps_Q must be positive", eps_Q=eps_Q)
    require(0 < alpha_Q < 1, "alpha_Q must lie in (0, 1)", alpha_Q=alpha_Q)
    return math.ceil(math.log(1.0 / alpha_Q) / eps_Q) * Tf_gates


def resource_report(
    M: int,
    B_A: int,
    B_S: int,
    B_Y: int,
    m: int,
    eps_tot: float,
    alpha_Q: float,
) -> ResourceReport:
    """Qubit and gate counts for the GI/GI/1 cycle truncated at M arrivals.

    B_W = ceil(log2 M) + B_S + guard bits; the history register holds M
    copies of B_W and dominates the qubit count.
    """
    require(M >= 1, "M must be at least 1", M=M)
    require(min(B_A, B_S, B_Y, m) >= 1, "register widths must be at least 1", B_A=B_A, B_S=B_S, B_Y=B_Y, m=m)
    counter = ceil_log2(2 * M)
    B_W = ceil_log2(M) + B_S + config.GUARD_BITS
    history = M * B_W
    B_R = ceil_log2(M + 1)
    ancilla = 2 * B_W
    flag = 1
    total = m + counter + B_A + B_S + B_W + history + B_R + B_Y + ancilla + flag
    per_step = B_W + B_A + B_S + B_R
    Tf = M * per_step
    eps_Q = eps_tot / (2.0 * M)
    return ResourceReport(
        seed_qubits=m,
        counter_qubits=counter,
        value_qubits_BA=B_A,
        value_qubits_BS=B_S,
        state_qubits_BW=B_W,
        history_qubits=history,
        counter_BR=B_R,
        output_BY=B_Y,
        ancilla=ancilla,
        flag=flag,
        total_Q=total,
        per_step_gates=per_step,
        Tf_gates=Tf,
        TQAE_gates=qae_gate_count(Tf, eps_Q, alpha_Q),
        model="gg1",
    )


def wireless_resource_report(
    K: int,
    M: int,
    A_max: int,
    mu_max: int,
    m: int,
    B_Y: int,
    eps_tot: float,
    alpha_Q: float,
) -> ResourceReport:
    """Qubit and gate counts for the MaxWeight cycle truncated at M slots.

    Each queue keeps a length register and a timestamp buffer of M * A_max
    slot stamps. Per slot the circuit samples K arrivals and K rates, forms
    K products Q_i * mu_i, selects the maximum and pops up to mu_max stamps.
    """
    require(min(K, M, A_max, mu_max, m, B_Y) >= 1, "all sizes must be at least 1")
    capacity = M * A_max
    B_Q = bits_for(capacity)
    B_T = bits_for(M)
    B_A = K * bits_for(A_max)
    B_mu = K * bits_for(mu_max)
    state = K * B_Q
    buffers = K * capacity * B_T
    counters = 2 * bits_for(K * capacity)  # N_M and J_M
    counter = ceil_log2(2 * K * M)
    ancilla = 2 * (B_Q + bits_for(mu_max))
    flag = 1
    total = m + counter + B_A + B_mu + state + buffers + counters + B_Y + ancilla + flag
    weight_bits = B_Q + bits_for(mu_max)
    per_step = K * (bits_for(A_max) + bits_for(mu_max) + B_Q * bits_for(mu_max) + weight_bits) + mu_max * B_T
    Tf = M * per_step
    eps_Q = eps_tot / (2.0 * M)
    return ResourceReport(
        seed_qubits=m,
        counter_qubits=counter,
        value_qubits_BA=B_A,
        value_qubits_BS=B_mu,
        state_qubits_BW=state,
        history_qubits=buffers,
        counter_BR=counters,
        output_BY=B_Y,
        ancilla=ancilla,
        flag=flag,
        total_Q=total,
        per_step_gates=per_step,
        Tf_gates=Tf,
        TQAE_gates=qae_gate_count(Tf, eps_Q, alpha_Q),
        model="maxweight",
    )


def jsq_resource_report(
    K: int,
    R_A: int,
    B_T: int,
    m: int,
    B_Y: int,
    eps_tot: float,
    alpha_Q: float,
) -> ResourceReport:
    """Qubit and gate counts for the JSQ cycle capped at R_A arrivals (2 R_A events).

    Time values (clock, residuals, stamps) use B_T bits. The stamp buffers
    hold up to R_A entries per server, the dominant K * R_A * B_T term.
    """
    require(min(K, R_A, B_T, m, B_Y) >= 1, "all sizes must be at least 1")
    events = 2 * R_A
    B_Q = bits_for(R_A)
    residuals = (K + 1) * B_T
    state = B_T + K * B_Q  # clock and queue lengths
    buffers = K * R_A * B_T
    counters = 2 * bits_for(R_A)  # n_arr and J
    counter = ceil_log2(2 * events + 2)
    ancilla = 2 * B_T
    flag = 1
    total = m + counter + residuals + state + buffers + counters + B_Y + ancilla + flag
    per_step = (K + 1) * B_T + K * B_Q + 2 * B_T
    Tf = events * per_step
    eps_Q = eps_tot / (2.0 * R_A)
    return ResourceReport(
        seed_qubits=m,
        counter_qubits=counter,
        value_qubits_BA=B_T,
        value_qubits_BS=K * B_T,
        state_qubits_BW=state,
        history_qubits=buffers,
        counter_BR=counters,
        output_BY=B_Y,
        ancilla=ancilla,
        flag=flag,
        total_Q=total,
        per_step_gates=per_step,
        Tf_gates=Tf,
        TQAE_gates=qae_gate_count(Tf, eps_Q, alpha_Q),
        model="jsq",
    )
