"""Orders config units

A Kahn sort over units that declare ``after`` (run these first) and
``before`` (run these later). Nodes may be added or removed while iterating,
which happens when a unit pulls in the targets of the selected command.
"""

from .exceptions import CycleException
from .logger import logger


class KahnIterator:
    """Iterates over a directed *ordering* graph

    Among the pending nodes the first one in insertion order whose
    predecessors have all been returned comes next.

    :ivar pending: Nodes not returned yet, in insertion order
    :ivar lst: Nodes already returned
    """

    def __init__(self, units=()):
        self.pending = []
        self.lst = []

        for unit in units:
            self.add_node(unit)

    def add_node(self, node):
        """Add another node, known nodes are ignored

        :param node: The node to add
        """
        if node in self.lst or node in self.pending:
            return
        self.pending.append(node)

    def remove_node(self, node):
        """Remove a node that was not returned yet

        :param node: The node to remove
        :raises ValueError: If the node already ran
        """
        if node in self.lst:
            raise ValueError("Cannot remove unit {} as it was already run".format(node))
        try:
            self.pending.remove(node)
        except ValueError:
            pass

    def _waits_for(self, node, other):
        return other is not node and (other in node.after or node in other.before)

    def ready(self, node) -> bool:
        return not any(self._waits_for(node, other) for other in self.pending)

    def __iter__(self):
        return self

    def __next__(self):
        """Get next node

        :raises CycleException: If the pending nodes wait on each other
        :raises StopIteration: If there is no more node
        """
        if not self.pending:
            raise StopIteration("No more node")

        for node in self.pending:
            if self.ready(node):
                self.pending.remove(node)
                self.lst.append(node)
                return node

        logger.debug("Pending units %s wait on each other", self.pending)
        raise CycleException("There was a cycle between {}".format(
            ", ".join(str(node) for node in self.pending)))
