"""
Polltri - proces trójkątny systemu obsługi wyczerpującej z trzema kolejkami.

Pakiet zawiera dokładną dynamikę rzutowanego dryfu na brzegu sympleksu,
silnik orbit okresowych, dynamikę symboliczną, konstrukcję punktów
decyzyjnych bez stabilności, symulację stochastyczną oraz CLI i API.
"""

__version__ = "1.0.0"
__author__ = "Papi"
