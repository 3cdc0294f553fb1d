from specflow.exceptions import ValidationError
from specflow.path_drivers.closed_form_driver import (AffineDriver,
                                                      ArctanDriver,
                                                      PolynomialDriver)
from specflow.path_drivers.keyframe_driver import KeyframeDriver


# Families that can be read from scenario files.
DRIVERS = {
    KeyframeDriver.family_id: KeyframeDriver,
    ArctanDriver.family_id: ArctanDriver,
    AffineDriver.family_id: AffineDriver,
    PolynomialDriver.family_id: PolynomialDriver,
}


def driver_from_json(data, field='path'):
    family = data.get('family')
    if family not in DRIVERS:
        raise ValidationError(field + '.family', 'unknown family %r, expected '
                              'one of %s' % (family, sorted(DRIVERS)))
    return DRIVERS[family].from_json(data, field)
