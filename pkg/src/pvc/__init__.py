"""Personal volunteer computing toolkit.

Stream a map over whatever devices you and your friends have lying
around: a coordinator lends input values to workers that join over
WebSocket (native processes or a browser page), reassembles results in
input order with exactly-once semantics under churn, and reports each
device's share of the throughput.
"""

__version__ = "0.1.0"
