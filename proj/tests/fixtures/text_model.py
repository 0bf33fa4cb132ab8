#!/usr/bin/env python3
"""Bag-of-words sentiment stand-in: scores token-list payloads by a fixed
keyword weight table."""
import json
import sys

WEIGHTS = {"有趣": 0.5, "深刻": 0.3}
BASE = 0.05
OTHER = 0.01

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    request = json.loads(line)
    scores = []
    for tokens in request["instances"]:
        scores.append(BASE + sum(WEIGHTS.get(t, OTHER) for t in tokens))
    print(json.dumps({"id": request["id"], "scores": scores}), flush=True)
