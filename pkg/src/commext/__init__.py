import jax


# every search runs in binary64; this has to happen before any array is created
jax.config.update("jax_enable_x64", True)

import commext.config as config  # noqa: E402
import commext.cubature as cubature  # noqa: E402
import commext.extensions as extensions  # noqa: E402
import commext.linalg as linalg  # noqa: E402
import commext.logging as logging  # noqa: E402
import commext.moments as moments  # noqa: E402
