package demo.annot;

import java.lang.annotation.*;

@Retention(RetentionPolicy.RUNTIME)
@Target({ElementType.TYPE, ElementType.METHOD})
public @interface AnnotationType {
    String value() default "";
    int[] codes() default {1, 2};
    Class<?> type() default Object.class;
}
