"""Two-stage IoT botnet detection at the edge gateway.

Stage 1 classifies fixed-duration aggregate traffic sessions using scanning
features; stage 2 checks each device's filtered command-channel traffic for
periodic beaconing via the autocorrelation function.
"""

__version__ = "0.1.0"
