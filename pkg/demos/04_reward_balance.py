"""
Balancing classification and reconstruction rewards
===================================================

The total step reward is r1 + lambda * r2 where r1 comes from the
confusion matrix and r2 from reconstruction error. lambda is adjusted
once per episode by a proportional controller pushing episode reward
toward a target. This script traces the controller under three regimes.
"""

from tsadrl.vae import LambdaController, update_lambda, total_reward

# Regime 1: episodes keep landing under target, lambda ramps up.
ctrl = LambdaController(lam=0.1, alpha=0.01, r_target=100.0)
print("under-target episodes (r_episode = 50):")
for ep in range(5):
    ctrl = update_lambda(ctrl, r_episode=50.0)
    print(f"  after episode {ep + 1}: lambda = {ctrl.lam:.3f}")

# Regime 2: over target, lambda backs off and clips at the floor.
ctrl = LambdaController(lam=0.05, alpha=0.01, r_target=100.0, lam_min=0.0)
print("\nover-target episodes (r_episode = 140):")
for ep in range(3):
    ctrl = update_lambda(ctrl, r_episode=140.0)
    print(f"  after episode {ep + 1}: lambda = {ctrl.lam:.3f}")
print("  clipped at lam_min, never negative")

# Regime 3: reward exactly on target is a fixed point.
ctrl = LambdaController(lam=0.7, alpha=0.05, r_target=80.0)
ctrl2 = update_lambda(ctrl, r_episode=80.0)
print(f"\non-target episode: lambda {ctrl.lam} -> {ctrl2.lam} (fixed point)")

# The ceiling matters too: persistent shortfall saturates at lam_max.
ctrl = LambdaController(lam=1.9, alpha=0.5, r_target=100.0, lam_max=2.0)
for _ in range(10):
    ctrl = update_lambda(ctrl, r_episode=0.0)
print(f"persistent shortfall saturates at lam_max: {ctrl.lam}")

# How lambda feeds the step reward:
for lam in (0.0, 0.5, 2.0):
    r = total_reward(r1=5.0, r2=0.8, lam=lam)
    print(f"r1=5.0 r2=0.8 lam={lam}: total {r:.2f}")
