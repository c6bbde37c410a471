"""Deliberately broken lender variants.

These exist to prove the interleaving suite has teeth: a checker that
never flags anything might just be blind.  Each mutant is a StreamLender
with one scheduling rule knocked out; `pvc interleave --mutant NAME`
and the test suite run the same checker against them and must find
violations.
"""

from __future__ import annotations

from .lender import REVOKED, StreamLender


class RelentWithoutRevokeLender(StreamLender):
    """Re-queues a withdrawn holder's items without revoking its leases.

    The items become lendable again while the original leases stay
    outstanding, so an index can be held by two live leases at once and
    the bookkeeping double-counts it.
    """

    def revoke(self, holder: str) -> list[int]:
        lease_ids = self._holder_leases.get(holder)
        if not lease_ids:
            return []
        recovered = []
        for lease_id in lease_ids:
            lease = self._outstanding[lease_id]
            recovered.extend(lease.items)
        recovered.sort(key=lambda item: item.index)
        self._pending.extendleft(reversed(recovered))
        self.requeued += len(recovered)
        return [item.index for item in recovered]


class DoubleLendLender(StreamLender):
    """Hands every index out twice: the first lend of an item re-queues a
    copy at the front, so the next lend gives the same index to another
    holder while the first lease is still outstanding."""

    def __init__(self, high_water=64):
        super().__init__(high_water=high_water)
        self._doubled: set[int] = set()

    def lend(self, holder, capacity):
        lease = super().lend(holder, capacity)
        if lease is not None:
            fresh = [item for item in lease.items
                     if item.index not in self._doubled]
            self._doubled.update(item.index for item in fresh)
            self._pending.extendleft(reversed(fresh))
        return lease


MUTANTS = {
    "relent-without-revoke": RelentWithoutRevokeLender,
    "double-lend": DoubleLendLender,
}
