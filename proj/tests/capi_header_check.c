/* The public header must compile as plain C. */
#include "lkqn/lkqn.h"

int lkqn_header_compiles_as_c(void) {
    lkqn_options o;
    lkqn_options_init(&o);
    return o.method == LKQN_METHOD_LKQN;
}
