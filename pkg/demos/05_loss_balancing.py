"""
EMA loss balancing between the two tasks
========================================

"""

import numpy as np

from frameparse.training import LossBalancer

balancer = LossBalancer(decay=0.9, warmup_steps=50, clamp=(0.1, 10.0))

# a frame loss that stays at 2 and an argument loss that stays at 4;
# warmup counts updates of either task, so 50 updates end after step 25
for step in range(1, 301):
    w_frame = balancer.update("frame", 2.0)
    w_args = balancer.update("args", 4.0)
    if step in (1, 25, 26, 300):
        print(f"step {step:3d}  frame weight {w_frame:.3f}  args weight {w_args:.3f}")

# weights settle at mean(ema) / ema: 3/2 and 3/4, so both weighted losses equal 3
print(balancer.weight("frame") * 2.0, balancer.weight("args") * 4.0)

# noisy streams: the EMA smooths the weights, and the clamp bounds them
rng = np.random.default_rng(0)
noisy = LossBalancer(warmup_steps=10)
for _ in range(200):
    noisy.update("frame", float(rng.gamma(2.0, 0.2)))
    noisy.update("args", float(rng.gamma(2.0, 1.0)))
print(noisy.weights())
