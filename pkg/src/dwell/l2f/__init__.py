"""Learn-to-Fly application layer

Aircraft truth model, NDI baseline, gain scheduling from the learned aero
model, PTI excitation, destabilization and the L1 rate loop bridge.
"""
