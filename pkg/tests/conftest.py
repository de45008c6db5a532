import pytest

from reaper import default_registry, parse_plan

GALAXY_PLAN_TEXT = (
    'Step 1: shipment_status(query="galaxy phone order")\n'
    'Step 2: prod_qna(product_id=$1.product_id, query="memory capacity")'
)


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture()
def galaxy_plan():
    return parse_plan(GALAXY_PLAN_TEXT)
