import logging


class LabComponent:
    """
    A check run by a :class:`~flowlab.laboratory.Laboratory`. Checks pull
    the laboratory's run products by annotating class variables::

        class LiYauCheck:

            # products of the laboratory, injected by name and type
            heat: ScalarEvolution
            bounds: CurvatureBounds

            alpha = tunable(2.0, key="estimates.liyau.alpha")

            def execute(self):
                self.reports = [liyau_check(self.heat, ..., self.bounds)]

    What this says is "find the product called ``heat``, which is a
    ScalarEvolution". If the name and type match, the product is set on
    the check before :meth:`setup` runs. ``Optional[...]`` annotations
    receive None when the laboratory does not produce the product.

    .. note:: You don't need to inherit from ``LabComponent``, it is only
              provided for documentation's sake
    """

    logger: logging.Logger

    #: Reports produced by :meth:`execute`, collected by the laboratory.
    reports: list

    def setup(self) -> None:
        """
        Called after every check has been created and injected, in the
        order the checks are declared on the laboratory. Optional.
        """

    def execute(self) -> None:
        """Runs the check. Must leave its results in ``self.reports``."""
