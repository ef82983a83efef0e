"""
Potential-based shaping leaves the greedy policy alone
======================================================

Adds gamma * phi(s') - phi(s) to every reward of a small random MDP and
checks, via value iteration, that the optimal action in every state is
unchanged. Also shows the telescoping identity at gamma = 1: over one
episode the shaping terms collapse to phi(last) - phi(first).
"""

import numpy as np

from tsadrl.potential import shaped_reward

rng = np.random.default_rng(0)
S, A, gamma = 6, 2, 0.9

# Random dense MDP: P[a, s, s'] transition probabilities, R[a, s] rewards.
P = rng.random((A, S, S))
P /= P.sum(axis=2, keepdims=True)
R = rng.normal(size=(A, S))
phi = rng.normal(size=S)


def value_iteration(Pm, Rm, g, iters=2000):
    V = np.zeros(S)
    for _ in range(iters):
        Q = Rm + g * Pm @ V
        V = Q.max(axis=0)
    return Rm + g * Pm @ V


# Shaped reward in expectation: r'(s, a) = r(s, a) + gamma * E[phi(s')] - phi(s).
R_shaped = R + gamma * (P @ phi) - phi[None, :]

Q_plain = value_iteration(P, R, gamma)
Q_shaped = value_iteration(P, R_shaped, gamma)

print("state  argmax(plain)  argmax(shaped)  Q-gap(plain)")
for s in range(S):
    gap = abs(Q_plain[0, s] - Q_plain[1, s])
    print(f"{s:>5}  {Q_plain[:, s].argmax():>13}  {Q_shaped[:, s].argmax():>14}  {gap:>11.4f}")

same = np.array_equal(Q_plain.argmax(axis=0), Q_shaped.argmax(axis=0))
print(f"\ngreedy policies identical: {same}")

# Advantage gaps shift by a state-dependent constant only, so they match exactly.
print(f"max |Q'-Q - const(s)| = "
      f"{np.max(np.abs((Q_shaped - Q_plain) - (Q_shaped - Q_plain)[0])):.2e}")

# Telescoping at gamma = 1: walk a random trajectory and sum both reward streams.
traj = rng.integers(0, S, size=30)
plain_sum = shaped_sum = 0.0
for i in range(len(traj) - 1):
    r = float(rng.normal())
    plain_sum += r
    shaped_sum += shaped_reward(r, phi[traj[i]], phi[traj[i + 1]], gamma=1.0)
lhs = shaped_sum - plain_sum
rhs = phi[traj[-1]] - phi[traj[0]]
print(f"\ngamma=1 telescoping: sum difference {lhs:+.12f} vs phi(end)-phi(start) {rhs:+.12f}")
print(f"agreement to {abs(lhs - rhs):.1e}")
