"""Information design for demand response.

A grid operator observes renewable generation and sends a signal. Consumers
update their beliefs and choose how much to curtail. The package computes the
operator's expected cost under any signalling policy, the optimal policy in
closed form, and independent brute-force checks of both.
"""

__version__ = "0.1.0"
