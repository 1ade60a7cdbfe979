# Walk through the messages exchanged when the seasoning supplier T4 fails.
#
# Run with:  python demos/04_message_transcript.py
# %%
import json

from supplynet import VertexLoss, World, plan, reference_network, run_recovery
from supplynet.agents import same_capability_peers

net = reference_network()
base = plan(net)
world = World.build(net, base)

# T4's own knowledge says who else can make seasoning
print("peers of T4:", same_capability_peers(world.agents["T4"], ("production", "SE")))

# %%
out = run_recovery(world, VertexLoss("T4"))
print("status", out.status.value, "messages", out.C_e)
for line in out.log.to_lines().splitlines():
    msg = json.loads(line)
    print(f"#{msg['seq']} {msg['type']:<8} {msg['from']} -> {msg['to'] or '*'}  {msg['payload']}")

# %% Only agents near T4 took part
print(sorted(out.log.participants()))
