# Command exports
from . import (
    analytic,
    simulate,
    sweep,
    sla,
    gen_bler,
    figures,
)
