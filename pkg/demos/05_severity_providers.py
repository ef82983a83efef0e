"""
Severity providers: heuristic scoring, prompts, reply parsing, caching
======================================================================

The shaping potential phi(s) is a severity score in [0, 1] for the state
window. It can come from a deterministic robust-z heuristic or from a
chat-completions endpoint. This script exercises both paths offline.
"""

import numpy as np

from tsadrl.potential import (
    HeuristicPotential,
    ConstantPotential,
    render_prompt,
    parse_severity,
    PotentialCache,
    LlmClientConfig,
    LlmPotential,
)

heur = HeuristicPotential()

# Anchor patterns: all-zeros must score exactly 0, the step pattern 0.75.
flat = np.zeros(8)
step = np.array([0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0])
print(f"all-zero window:  severity {heur.score(flat).value:.2f}")
print(f"step-up window:   severity {heur.score(step).value:.2f}")

spiky = np.array([0.1, -0.2, 0.05, 0.1, -0.1, 0.0, 0.15, 9.0])
print(f"single big spike: severity {heur.score(spiky).value:.2f}")
print(f"constant provider always returns {ConstantPotential(0.0).score(spiky).value}")

# The prompt a language model would see for the spiky window.
print("\n--- rendered prompt -------------------------------------------")
print(render_prompt(spiky))
print("---------------------------------------------------------------")

# Reply parsing is total: valid JSON wins, junk degrades to 0.5.
for reply in ('{"severity": 0.9}',
              'Sure! The answer is {"severity": "0.30"} as requested.',
              '{"severity": 7}',
              'no json here at all'):
    s = parse_severity(reply)
    print(f"reply {reply!r:55} -> {s.value:.2f} ({s.source})")

# Identical windows hit the cache instead of the network. Demonstrated with
# a client pointed at a dead port: the first call falls back, and once a
# score is cached the client never issues a second request for that window.
cache = PotentialCache()
cfg = LlmClientConfig(base_url="http://127.0.0.1:9", model="demo",
                      retries=1, backoff_s=0.0, timeout_s=0.2)
llm = LlmPotential(cfg, cache=cache)
first = llm.score(spiky)
print(f"\ndead endpoint, first call:  {first.value:.2f} ({first.source})")
cache.put(PotentialCache.key(spiky), first)
second = llm.score(spiky)
print(f"dead endpoint, second call: {second.value:.2f} ({second.source}{', no request made' if second.source == 'cache' else ''})")
print(f"cache holds {len(cache)} entry")
