"""
Checking autograd against central differences
=============================================

"""

from frameparse import ModelConfig, grad_check

# the tiny config: 16-dim, one layer each side, two heads
config = ModelConfig.tiny(vocab_size=40, num_frame_classes=6)
src = [1, 9, 4, 10, 4, 11, 12, 2]      # 4 marks the trigger in this toy vocabulary

# sequence loss of the decoder against a short target
print("seq_loss   ", grad_check(config, src, target=[20, 21, 22], loss="seq"))

# frame-classifier loss, pooled over the trigger position
print("class_loss ", grad_check(config, src, gold_class=2, trigger=[3], loss="class"))

# both numbers are worst-case relative errors over sampled entries of every tensor,
# computed in float64; anything under 1e-4 means the gradients agree
